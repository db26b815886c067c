#pragma once

#include "pngrasp/binary_io.hpp"
#include "pngrasp/geometry/kdtree.hpp"
#include "pngrasp/scenegen/capture.hpp"
#include "pngrasp/scenegen/filter.hpp"

namespace pngrasp {

/// [normal(3), rotation(3), category, score]
using PointLabel = std::array<double, 8>;
/// [m_normal, m_rotation, m_category, m_score]
using PointMask = std::array<std::uint8_t, 4>;

inline constexpr PointMask kMaskObject{0, 0, 0, 0};
inline constexpr PointMask kMaskGround{0, 0, 1, 0};
inline constexpr PointMask kMaskPositive{1, 1, 1, 1};
inline constexpr PointMask kMaskNegative{1, 0, 1, 1};

inline bool is_emitted_mask(const PointMask& m) {
  return m == kMaskObject || m == kMaskGround || m == kMaskPositive || m == kMaskNegative;
}

struct TrainingSample {
  std::vector<Vec3> points;
  std::vector<PointLabel> labels;
  std::vector<PointMask> masks;

  std::size_t size() const { return points.size(); }
  bool consistent() const { return labels.size() == points.size() && masks.size() == points.size(); }
};

struct LabelStats {
  int positives = 0;
  int negatives = 0;
  int dropped = 0;  // planned points with no captured neighbor
};

/// Labels the captured cloud and appends every planned point that has a
/// captured neighbor within `radius`.
inline TrainingSample assign_labels(const Capture& y, const FilteredGrasps& grasps, double radius = 1.0,
                                    LabelStats* stats = nullptr) {
  require(!y.cloud.empty(), ErrorCode::EmptyInput, "cannot label an empty capture");
  require(radius > 0, ErrorCode::InvalidArgument, "label radius must be positive");
  TrainingSample s;
  s.points = y.cloud.points;
  s.labels.assign(s.points.size(), PointLabel{});
  s.masks.resize(s.points.size());
  for (std::size_t i = 0; i < s.points.size(); ++i) s.masks[i] = y.is_ground(i) ? kMaskGround : kMaskObject;

  const KdTree tree(y.cloud.points);
  LabelStats st;
  for (const ScenePositive& p : grasps.positives) {
    const Grasp& g = p.grasp.grasp;
    if (!tree.radius_nearest(g.point, radius)) {
      ++st.dropped;
      continue;
    }
    s.points.push_back(g.point);
    s.labels.push_back({g.approach.x(), g.approach.y(), g.approach.z(), g.opening.x(), g.opening.y(), g.opening.z(),
                        1.0, p.grasp.q_c});
    s.masks.push_back(kMaskPositive);
    ++st.positives;
  }
  for (const SceneNegative& n : grasps.negatives) {
    if (!tree.radius_nearest(n.point, radius)) {
      ++st.dropped;
      continue;
    }
    s.points.push_back(n.point);
    s.labels.push_back({n.normal.x(), n.normal.y(), n.normal.z(), 0, 0, 0, 0, 0});
    s.masks.push_back(kMaskNegative);
    ++st.negatives;
  }
  if (stats) *stats = st;
  return s;
}

inline constexpr std::string_view kSampleMagic = "PNGD";
inline constexpr std::uint32_t kSampleVersion = 1;

/// Points and labels are narrowed to float32 on disk.
inline std::string encode_sample(const TrainingSample& s) {
  require(s.consistent(), ErrorCode::InvalidArgument, "sample arrays differ in length");
  BinaryWriter w;
  w.put_bytes(kSampleMagic);
  w.put<std::uint32_t>(kSampleVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
  for (const Vec3& p : s.points)
    for (int k = 0; k < 3; ++k) w.put<float>(static_cast<float>(p[k]));
  for (const PointLabel& l : s.labels)
    for (double x : l) w.put<float>(static_cast<float>(x));
  for (const PointMask& m : s.masks) w.put_bytes({reinterpret_cast<const char*>(m.data()), 4});
  return w.data();
}

inline TrainingSample decode_sample(const std::string& bytes) {
  BinaryReader r(bytes);
  r.expect_magic(kSampleMagic);
  const auto version = r.get<std::uint32_t>();
  if (version != kSampleVersion) fail(ErrorCode::Format, "unsupported sample version " + std::to_string(version));
  const auto n = r.get<std::uint32_t>();
  if (r.remaining() != static_cast<std::size_t>(n) * (12 + 32 + 4))
    fail(ErrorCode::Format, "sample size does not match its point count");
  TrainingSample s;
  s.points.resize(n);
  s.labels.resize(n);
  s.masks.resize(n);
  for (auto& p : s.points)
    for (int k = 0; k < 3; ++k) p[k] = r.get<float>();
  for (auto& l : s.labels)
    for (double& x : l) x = r.get<float>();
  for (auto& m : s.masks)
    for (auto& b : m) b = r.get<std::uint8_t>();
  for (const auto& m : s.masks)
    if (!is_emitted_mask(m)) fail(ErrorCode::Format, "sample contains an unknown mask pattern");
  return s;
}

inline void save_sample(const std::filesystem::path& path, const TrainingSample& s) {
  write_binary_file(path, encode_sample(s));
}

inline TrainingSample load_sample(const std::filesystem::path& path) { return decode_sample(read_binary_file(path)); }

}  // namespace pngrasp
