#pragma once

#include "pngrasp/geometry/bvh.hpp"
#include "pngrasp/geometry/sampling.hpp"

#include <optional>
#include <span>

namespace pngrasp {

/// Pinhole intrinsics in pixels. Pixel (u, v) samples the ray through
/// ((u - cx) / fx, (v - cy) / fy, 1) in the camera frame (x right, y down,
/// z forward).
struct CameraIntrinsics {
  double fx = 475.0;
  double fy = 475.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  bool is_valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 && cx <= width - 1 && cy >= 0 &&
           cy <= height - 1;
  }

  /// Same field of view at a different resolution.
  CameraIntrinsics resized(int w, int h) const {
    const double sx = static_cast<double>(w) / width;
    const double sy = static_cast<double>(h) / height;
    return CameraIntrinsics{fx * sx, fy * sy, cx * sx, cy * sy, w, h};
  }
};

struct Camera {
  RigidTransform pose;  // camera frame -> world frame
  CameraIntrinsics intrinsics;

  Vec3 position() const { return pose.translation; }
  Vec3 optical_axis() const { return pose.rotation.col(2); }
};

/// Z-depth per pixel (0 where no surface was hit) and the index of the
/// scene mesh that produced each sample (-1 where invalid).
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<int> source;

  bool valid(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u] > 0; }
  double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count_if(depth.begin(), depth.end(), [](double d) { return d > 0; }));
  }
};

/// Half-open pixel rectangle [u0, u1) x [v0, v1).
struct PixelRect {
  int u0 = 0, v0 = 0, u1 = 0, v1 = 0;
};

/// Casts one ray per pixel (only inside `roi` when given; the rest stay
/// invalid) and keeps the nearest hit over all scene meshes.
inline DepthImage render_depth(std::span<const IndexedMesh* const> scene, const Camera& camera,
                               const std::optional<PixelRect>& roi = std::nullopt) {
  const CameraIntrinsics& K = camera.intrinsics;
  require(K.is_valid(), ErrorCode::InvalidArgument, "invalid camera intrinsics");
  DepthImage img;
  img.width = K.width;
  img.height = K.height;
  img.depth.assign(static_cast<std::size_t>(K.width) * K.height, 0.0);
  img.source.assign(img.depth.size(), -1);
  const Vec3 origin = camera.pose.translation;
  PixelRect r{0, 0, K.width, K.height};
  if (roi) {
    r.u0 = std::clamp(roi->u0, 0, K.width);
    r.u1 = std::clamp(roi->u1, r.u0, K.width);
    r.v0 = std::clamp(roi->v0, 0, K.height);
    r.v1 = std::clamp(roi->v1, r.v0, K.height);
  }
  for (int v = r.v0; v < r.v1; ++v) {
    for (int u = r.u0; u < r.u1; ++u) {
      // Unnormalized ray with unit z component: the hit parameter is z-depth.
      const Vec3 dir_cam((u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0);
      const Vec3 dir = camera.pose.rotation * dir_cam;
      double best = std::numeric_limits<double>::infinity();
      int src = -1;
      for (std::size_t m = 0; m < scene.size(); ++m) {
        const RayHit hit = scene[m]->raycast(origin, dir, 1e-9, best);
        if (hit.valid() && hit.t < best) {
          best = hit.t;
          src = static_cast<int>(m);
        }
      }
      if (src >= 0) {
        const std::size_t idx = static_cast<std::size_t>(v) * K.width + u;
        img.depth[idx] = best;
        img.source[idx] = src;
      }
    }
  }
  return img;
}

struct BackprojectedCloud {
  PointCloud cloud;          // world frame
  std::vector<int> source;   // scene mesh per point
  std::vector<int> pixel;    // v * width + u per point
};

/// Inverts the pinhole model for every valid pixel, in row-major order.
inline BackprojectedCloud backproject(const DepthImage& img, const Camera& camera) {
  const CameraIntrinsics& K = camera.intrinsics;
  BackprojectedCloud out;
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v) * img.width + u;
      const double z = img.depth[idx];
      if (!(z > 0)) continue;
      const Vec3 pc((u - K.cx) / K.fx * z, (v - K.cy) / K.fy * z, z);
      out.cloud.points.push_back(camera.pose.apply(pc));
      out.source.push_back(img.source[idx]);
      out.pixel.push_back(static_cast<int>(idx));
    }
  }
  return out;
}

}  // namespace pngrasp
