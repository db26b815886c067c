#pragma once

#include "pngrasp/common.hpp"

#include <numeric>
#include <random>
#include <span>

namespace pngrasp {

struct PreprocessConfig {
  double scale = 330.0;  // M, in mm (0.33 m)
  double jitter = 1.0;   // sigma, mm; applied only when requested
  int points = 8192;

  bool is_valid() const { return scale > 0 && jitter >= 0 && points >= 1; }
};

struct PreparedCloud {
  Eigen::Matrix3Xd xyz;     // scaled, centered network input
  std::vector<int> source;  // input index behind each column
  Vec3 center = Vec3::Zero();  // mm, subtracted before scaling
};

/// Resamples to exactly cfg.points (without replacement when the cloud is
/// large enough), centers the resampled set, divides by M and optionally
/// jitters. Centering after resampling keeps the jitter-free mean at zero.
inline PreparedCloud preprocess(std::span<const Vec3> cloud, const PreprocessConfig& cfg, std::uint64_t seed,
                                bool jitter) {
  require(!cloud.empty(), ErrorCode::EmptyInput, "cannot preprocess an empty cloud");
  require(cfg.is_valid(), ErrorCode::InvalidArgument, "invalid preprocessing configuration");
  std::mt19937_64 rng(seed);
  const std::size_t n = cloud.size();
  const std::size_t m = static_cast<std::size_t>(cfg.points);
  PreparedCloud out;
  out.source.resize(m);
  if (n >= m) {
    // Partial Fisher-Yates: the first m entries are a uniform draw.
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + std::uniform_int_distribution<std::size_t>(0, n - 1 - i)(rng);
      std::swap(idx[i], idx[j]);
    }
    std::copy(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), out.source.begin());
  } else {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1);
    for (int& s : out.source) s = pick(rng);
  }
  out.xyz.resize(3, static_cast<Eigen::Index>(m));
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < m; ++i) sum += cloud[out.source[i]];
  out.center = sum / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) out.xyz.col(static_cast<Eigen::Index>(i)) = (cloud[out.source[i]] - out.center) / cfg.scale;
  // Recentering in scaled units removes the rounding left by the mm mean.
  const Vec3 residual = out.xyz.rowwise().mean();
  out.xyz.colwise() -= residual;
  if (jitter && cfg.jitter > 0) {
    std::normal_distribution<double> g(0.0, cfg.jitter / cfg.scale);
    for (Eigen::Index i = 0; i < out.xyz.cols(); ++i)
      for (int k = 0; k < 3; ++k) out.xyz(k, i) += g(rng);
  }
  return out;
}

}  // namespace pngrasp
