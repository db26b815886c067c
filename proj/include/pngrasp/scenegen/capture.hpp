#pragma once

#include "pngrasp/geometry/camera.hpp"
#include "pngrasp/scenegen/scene.hpp"

#include <numbers>
#include <random>

namespace pngrasp {

/// Camera placement ranges around the scene center.
struct CameraBands {
  double radius_min = 400.0;  // mm
  double radius_max = 800.0;
  double elevation_min = 30.0;  // degrees above the ground plane
  double elevation_max = 80.0;

  bool is_valid() const {
    return radius_min > 0 && radius_max >= radius_min && elevation_min >= 0 && elevation_max <= 90 &&
           elevation_max >= elevation_min;
  }
};

struct CameraSample {
  Camera camera;
  double radius = 0.0;
  double elevation = 0.0;  // radians
  double azimuth = 0.0;
  double roll = 0.0;
};

/// Uniform radius, elevation, azimuth and roll; the optical axis is aimed
/// exactly at `target`.
inline CameraSample randomize_camera(const Vec3& target, std::uint64_t seed, const CameraBands& bands = {},
                                     const CameraIntrinsics& intrinsics = {}) {
  require(bands.is_valid(), ErrorCode::InvalidArgument, "invalid camera bands");
  constexpr double kDeg = std::numbers::pi / 180.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CameraSample s;
  s.radius = bands.radius_min + unit(rng) * (bands.radius_max - bands.radius_min);
  s.elevation = (bands.elevation_min + unit(rng) * (bands.elevation_max - bands.elevation_min)) * kDeg;
  s.azimuth = 2.0 * std::numbers::pi * unit(rng);
  s.roll = 2.0 * std::numbers::pi * unit(rng);

  const Vec3 offset(std::cos(s.elevation) * std::cos(s.azimuth), std::cos(s.elevation) * std::sin(s.azimuth),
                    std::sin(s.elevation));
  const Vec3 position = target + s.radius * offset;
  const Vec3 z = -offset;
  // Straight down is the one direction where the world up axis is useless.
  const Vec3 side = std::abs(z.z()) > 1 - 1e-9 ? Vec3::UnitX() : z.cross(Vec3::UnitZ()).normalized();
  Mat3 R;
  R.col(0) = side;
  R.col(1) = z.cross(side);
  R.col(2) = z;
  s.camera.pose.rotation = R * Eigen::AngleAxisd(s.roll, Vec3::UnitZ()).toRotationMatrix();
  s.camera.pose.translation = position;
  s.camera.intrinsics = intrinsics;
  return s;
}

/// World-frame points of one view, tagged by the mesh they came from:
/// 0 for the ground, i + 1 for scene object i.
struct Capture {
  PointCloud cloud;
  std::vector<int> source;

  bool is_ground(std::size_t i) const { return source[i] == 0; }
};

/// Pixel window covering the projection of an axis-aligned world box, or
/// nullopt when part of the box is behind the camera.
inline std::optional<PixelRect> project_box(const Camera& camera, const Aabb& box) {
  const CameraIntrinsics& K = camera.intrinsics;
  const RigidTransform to_cam = camera.pose.inverse();
  double u0 = std::numeric_limits<double>::infinity(), v0 = u0, u1 = -u0, v1 = -u0;
  for (int c = 0; c < 8; ++c) {
    const Vec3 w((c & 1) ? box.hi.x() : box.lo.x(), (c & 2) ? box.hi.y() : box.lo.y(),
                 (c & 4) ? box.hi.z() : box.lo.z());
    const Vec3 p = to_cam.apply(w);
    if (p.z() < 1.0) return std::nullopt;
    const double u = K.fx * p.x() / p.z() + K.cx;
    const double v = K.fy * p.y() / p.z() + K.cy;
    u0 = std::min(u0, u);
    u1 = std::max(u1, u);
    v0 = std::min(v0, v);
    v1 = std::max(v1, v);
  }
  // One pixel of margin on each side absorbs rounding at the crop edge.
  auto lo = [](double x) { return static_cast<int>(std::clamp(std::floor(x) - 1.0, -1e6, 1e6)); };
  auto hi = [](double x) { return static_cast<int>(std::clamp(std::ceil(x) + 2.0, -1e6, 1e6)); };
  return PixelRect{lo(u0), lo(v0), hi(u1), hi(v1)};
}

/// Renders the scene, back-projects to the world frame and keeps the points
/// with |x|, |y| <= crop_half.
inline Capture capture(const SceneGeometry& geometry, const Camera& camera, double crop_half = 100.0) {
  require(crop_half > 0, ErrorCode::InvalidArgument, "crop half-extent must be positive");
  const auto meshes = geometry.all();
  double top = 0.0;
  for (const auto& o : geometry.objects) top = std::max(top, o->bounds().hi.z());
  const Aabb window{Vec3(-crop_half, -crop_half, 0.0), Vec3(crop_half, crop_half, top)};
  const DepthImage img = render_depth(meshes, camera, project_box(camera, window));
  const BackprojectedCloud bp = backproject(img, camera);
  Capture out;
  for (std::size_t i = 0; i < bp.cloud.size(); ++i) {
    const Vec3& p = bp.cloud.points[i];
    if (std::abs(p.x()) > crop_half || std::abs(p.y()) > crop_half) continue;
    out.cloud.points.push_back(p);
    out.source.push_back(bp.source[i]);
  }
  if (out.cloud.empty()) fail(ErrorCode::EmptyCapture, "no points inside the crop window");
  return out;
}

}  // namespace pngrasp
