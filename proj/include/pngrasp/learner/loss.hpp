#pragma once

#include "pngrasp/learner/network.hpp"
#include "pngrasp/scenegen/labels.hpp"

namespace pngrasp {

/// Channel layout of the raw head block.
inline constexpr int kScoreRow = 0;
inline constexpr int kCategoryRow = 1;  // logits [negative, positive]
inline constexpr int kNormalRow = 3;
inline constexpr int kRotationRow = 6;

/// Below this norm a projected rotation has no usable direction.
inline constexpr double kDegenerateProjection = 1e-8;

struct HeadOutputs {
  std::vector<double> score;
  std::vector<double> category;  // probability of the graspable class
  std::vector<Vec3> normal;
  std::vector<Vec3> rotation;

  std::size_t size() const { return score.size(); }
};

namespace detail {

inline Vec3 safe_normalized(const Vec3& v) {
  const double n = v.norm();
  return n > 0 ? Vec3(v / n) : Vec3::UnitZ();
}

inline double positive_probability(double z0, double z1) {
  // Two-way softmax without overflow.
  return z1 >= z0 ? 1.0 / (1.0 + std::exp(z0 - z1)) : std::exp(z1 - z0) / (1.0 + std::exp(z1 - z0));
}

}  // namespace detail

inline HeadOutputs decode_heads(const Eigen::MatrixXd& raw) {
  require(raw.rows() == NetworkConfig::kHeadChannels, ErrorCode::ConfigMismatch, "head block must have 9 rows");
  HeadOutputs h;
  const auto n = static_cast<std::size_t>(raw.cols());
  h.score.resize(n);
  h.category.resize(n);
  h.normal.resize(n);
  h.rotation.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    h.score[i] = raw(kScoreRow, c);
    h.category[i] = detail::positive_probability(raw(kCategoryRow, c), raw(kCategoryRow + 1, c));
    h.normal[i] = detail::safe_normalized(raw.block<3, 1>(kNormalRow, c));
    h.rotation[i] = detail::safe_normalized(raw.block<3, 1>(kRotationRow, c));
  }
  return h;
}

struct LossConfig {
  bool per_mask_normalization = false;  // divide each term by its masked count instead of M_pts
};

struct LossBreakdown {
  double score = 0, category = 0, normal = 0, rotation = 0, total = 0;
  int m_pts = 0;
  int degenerate = 0;  // rotation-masked points with no usable projection
};

/// Projection of `p` onto the plane orthogonal to unit `n`.
inline Vec3 project_out(const Vec3& p, const Vec3& n) { return p - p.dot(n) * n; }

/// Masked score, category, normal and rotation losses over the raw head
/// block. When `grad` is given it receives d(total)/d(raw).
inline LossBreakdown compute_loss(const Eigen::MatrixXd& raw, std::span<const PointLabel> labels,
                                  std::span<const PointMask> masks, Eigen::MatrixXd* grad = nullptr,
                                  const LossConfig& cfg = {}) {
  require(raw.rows() == NetworkConfig::kHeadChannels, ErrorCode::ConfigMismatch, "head block must have 9 rows");
  require(static_cast<std::size_t>(raw.cols()) == labels.size() && labels.size() == masks.size(),
          ErrorCode::InvalidArgument, "heads, labels and masks differ in length");
  LossBreakdown out;
  const Eigen::Index n = raw.cols();
  out.m_pts = static_cast<int>(n);
  if (grad) grad->setZero(raw.rows(), n);
  if (n == 0) return out;

  std::array<double, 4> divisor;
  divisor.fill(static_cast<double>(n));
  if (cfg.per_mask_normalization) {
    std::array<int, 4> counts{};
    for (const PointMask& m : masks)
      for (int k = 0; k < 4; ++k) counts[k] += m[k] ? 1 : 0;
    for (int k = 0; k < 4; ++k) divisor[k] = std::max(counts[k], 1);
  }
  // Mask order: [normal, rotation, category, score].
  const double sn = 1.0 / divisor[0], sr = 1.0 / divisor[1], sc = 1.0 / divisor[2], ss = 1.0 / divisor[3];

  for (Eigen::Index i = 0; i < n; ++i) {
    const PointLabel& l = labels[static_cast<std::size_t>(i)];
    const PointMask& m = masks[static_cast<std::size_t>(i)];
    if (m[3]) {
      const double e = raw(kScoreRow, i) - l[7];
      out.score += ss * e * e;
      if (grad) (*grad)(kScoreRow, i) = ss * 2.0 * e;
    }
    if (m[2]) {
      const double z0 = raw(kCategoryRow, i), z1 = raw(kCategoryRow + 1, i);
      const double zmax = std::max(z0, z1);
      const double lse = zmax + std::log(std::exp(z0 - zmax) + std::exp(z1 - zmax));
      const double y = l[6];
      out.category += sc * -(y * (z1 - lse) + (1.0 - y) * (z0 - lse));
      if (grad) {
        const double p1 = std::exp(z1 - lse);
        (*grad)(kCategoryRow + 1, i) = sc * (p1 - y);
        (*grad)(kCategoryRow, i) = -sc * (p1 - y);
      }
    }
    const Vec3 label_n(l[0], l[1], l[2]);
    if (m[0]) {
      const Vec3 u = raw.block<3, 1>(kNormalRow, i);
      const double un = u.norm();
      const Vec3 p = un > 0 ? Vec3(u / un) : Vec3::Zero();  // a zero head scores as orthogonal
      out.normal += sn * (1.0 - label_n.dot(p));
      if (grad && un > 0) {
        const Vec3 dp = -sn * label_n;
        grad->block<3, 1>(kNormalRow, i) = (dp - dp.dot(p) * p) / un;
      }
    }
    if (m[1]) {
      const Vec3 v = raw.block<3, 1>(kRotationRow, i);
      const double vn = v.norm();
      const Vec3 q = v / vn;
      const Vec3 proj = project_out(q, label_n);
      const double pn = proj.norm();
      if (!(pn >= kDegenerateProjection)) {
        out.rotation += sr;
        ++out.degenerate;
        continue;
      }
      const Vec3 ph = proj / pn;
      const Vec3 label_r(l[3], l[4], l[5]);
      const double cosine = label_r.dot(ph);
      out.rotation += sr * (1.0 - cosine * cosine);
      if (grad) {
        const Vec3 dph = -sr * 2.0 * cosine * label_r;
        const Vec3 dproj = (dph - dph.dot(ph) * ph) / pn;
        const Vec3 dq = project_out(dproj, label_n);
        grad->block<3, 1>(kRotationRow, i) = (dq - dq.dot(q) * q) / vn;
      }
    }
  }
  out.total = out.score + out.category + out.normal + out.rotation;
  return out;
}

/// Training-set diagnostics in the same masking scheme as the loss.
struct HeadMetrics {
  int category_points = 0;
  int category_correct = 0;
  int positive_points = 0;
  int positive_correct = 0;
  int normal_points = 0;
  double normal_cosine_sum = 0;

  double category_accuracy() const { return category_points ? double(category_correct) / category_points : 1.0; }
  double positive_recall() const { return positive_points ? double(positive_correct) / positive_points : 1.0; }
  double normal_cosine() const { return normal_points ? normal_cosine_sum / normal_points : 1.0; }

  void add(const HeadMetrics& o) {
    category_points += o.category_points;
    category_correct += o.category_correct;
    positive_points += o.positive_points;
    positive_correct += o.positive_correct;
    normal_points += o.normal_points;
    normal_cosine_sum += o.normal_cosine_sum;
  }
};

inline HeadMetrics head_metrics(const HeadOutputs& h, std::span<const PointLabel> labels,
                                std::span<const PointMask> masks, double threshold = 0.5) {
  HeadMetrics m;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (masks[i][2]) {
      const bool predicted = h.category[i] >= threshold;
      const bool truth = labels[i][6] > 0.5;
      ++m.category_points;
      m.category_correct += predicted == truth;
      if (truth) {
        ++m.positive_points;
        m.positive_correct += predicted;
      }
    }
    if (masks[i][0]) {
      ++m.normal_points;
      m.normal_cosine_sum += Vec3(labels[i][0], labels[i][1], labels[i][2]).dot(h.normal[i]);
    }
  }
  return m;
}

}  // namespace pngrasp
