#pragma once

#include "pngrasp/common.hpp"

#include <cmath>

namespace pngrasp {

/// Proper rigid motion x -> R x + t. Translation is in millimeters.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  static RigidTransform from_axis_angle(const Vec3& axis, double angle,
                                        const Vec3& t = Vec3::Zero()) {
    RigidTransform out;
    out.rotation = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
    out.translation = t;
    return out;
  }

  static RigidTransform translation_only(const Vec3& t) {
    RigidTransform out;
    out.translation = t;
    return out;
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }

  RigidTransform inverse() const {
    RigidTransform out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    return out;
  }

  // (a * b).apply(x) == a.apply(b.apply(x))
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
    RigidTransform out;
    out.rotation = a.rotation * b.rotation;
    out.translation = a.rotation * b.translation + a.translation;
    return out;
  }

  bool is_valid(double tol = 1e-9) const {
    const Mat3 gram = rotation.transpose() * rotation;
    return (gram - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol &&
           translation.allFinite();
  }
};

/// Rotation taking unit vector `from` onto unit vector `to`.
inline Mat3 rotation_between(const Vec3& from, const Vec3& to) {
  return Eigen::Quaterniond::FromTwoVectors(from, to).toRotationMatrix();
}

}  // namespace pngrasp
