#pragma once

#include "pngrasp/learner.hpp"
#include "test_support.hpp"

namespace pngrasp::testing {

/// Small network over 64-point clouds, cheap enough for finite differences.
inline NetworkConfig tiny_network(int points = 64) {
  NetworkConfig c;
  c.points = points;
  c.neighbor_cap = 8;
  c.sa = {{16, 0.35, {8, 8}}, {4, 0.8, {8, 12}}};
  c.fp = {{12}, {10, 8}};
  c.head_hidden = 8;
  return c;
}

struct LabeledBatch {
  Eigen::Matrix3Xd xyz;
  std::vector<PointLabel> labels;
  std::vector<PointMask> masks;
};

/// Random cloud with every mask pattern present and labels shaped like the
/// generator's: unit normals, openings orthogonal to them.
inline LabeledBatch random_batch(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-0.4, 0.4), q(0.0, 1.0);
  const PointMask patterns[4] = {kMaskObject, kMaskGround, kMaskPositive, kMaskNegative};
  LabeledBatch b;
  b.xyz.resize(3, n);
  for (int i = 0; i < n; ++i) {
    b.xyz.col(i) = Vec3(u(rng), u(rng), u(rng));
    const PointMask m = patterns[i % 4];
    const Vec3 nrm = random_unit(rng);
    const Vec3 r = project_out(random_unit(rng), nrm).normalized();
    PointLabel l{};
    if (m == kMaskPositive) l = {nrm.x(), nrm.y(), nrm.z(), r.x(), r.y(), r.z(), 1.0, q(rng)};
    else if (m == kMaskNegative) l = {nrm.x(), nrm.y(), nrm.z(), 0, 0, 0, 0, 0};
    b.labels.push_back(l);
    b.masks.push_back(m);
  }
  return b;
}

inline PointMask only_bit(const PointMask& m, int bit) {
  PointMask out{0, 0, 0, 0};
  out[bit] = m[bit];
  return out;
}

/// Loss component by mask bit: [normal, rotation, category, score].
inline double component(const LossBreakdown& lb, int bit) {
  switch (bit) {
    case 0: return lb.normal;
    case 1: return lb.rotation;
    case 2: return lb.category;
    default: return lb.score;
  }
}

inline std::vector<PointMask> masks_for(std::span<const PointMask> masks, int bit) {
  std::vector<PointMask> out;
  for (const PointMask& m : masks) out.push_back(only_bit(m, bit));
  return out;
}

/// Parameter step for central differences. The network is piecewise smooth
/// (ReLU, max-pool); steps near 1e-4 regularly straddle an activation or
/// argmax switch somewhere among thousands of units.
inline constexpr double kFiniteDifferenceStep = 1e-6;

/// Initial weights with random biases. Zero biases put every first-level
/// centroid (its own neighbour, relative offset 0) exactly on a ReLU kink,
/// where central differences straddle two slopes.
inline NetworkWeights generic_weights(const NetworkConfig& cfg, std::uint64_t seed) {
  NetworkWeights w = init_weights(cfg, seed);
  std::mt19937_64 rng(seed ^ 0xb1a5);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  w.visit([&](Dense& d) {
    for (Eigen::Index i = 0; i < d.b.size(); ++i) d.b[i] = u(rng);
  });
  return w;
}

inline double relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  const double scale = std::max(analytic.norm(), numeric.norm());
  return scale > 0 ? (analytic - numeric).norm() / scale : 0.0;
}

inline Eigen::VectorXd flatten(const NetworkWeights& w) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(w.parameter_count()));
  Eigen::Index k = 0;
  w.visit([&](const Dense& d) {
    for (Eigen::Index i = 0; i < d.W.size(); ++i) out[k++] = d.W.data()[i];
    for (Eigen::Index i = 0; i < d.b.size(); ++i) out[k++] = d.b.data()[i];
  });
  return out;
}

inline std::vector<double*> parameter_slots(NetworkWeights& w) {
  std::vector<double*> out;
  w.visit([&](Dense& d) {
    for (Eigen::Index i = 0; i < d.W.size(); ++i) out.push_back(d.W.data() + i);
    for (Eigen::Index i = 0; i < d.b.size(); ++i) out.push_back(d.b.data() + i);
  });
  return out;
}

struct GradientErrors {
  std::array<double, 4> head{};   // per mask bit, d loss / d raw heads
  std::array<double, 4> param{};  // per mask bit, d loss / d weights
  double worst() const {
    double m = 0;
    for (int k = 0; k < 4; ++k) m = std::max({m, head[k], param[k]});
    return m;
  }
};

/// Central differences of every loss component against the analytic
/// gradient, both at the raw head outputs and at every network parameter.
inline GradientErrors finite_difference_check(const NetworkConfig& cfg, const NetworkWeights& weights,
                                              const LabeledBatch& b, double step) {
  GradientErrors err;
  const ForwardCache fc = forward(cfg, weights, b.xyz);
  std::array<std::vector<PointMask>, 4> cm;
  for (int bit = 0; bit < 4; ++bit) cm[bit] = masks_for(b.masks, bit);

  for (int bit = 0; bit < 4; ++bit) {
    Eigen::MatrixXd dout;
    compute_loss(fc.out, b.labels, cm[bit], &dout);
    Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(dout.data(), dout.size());
    Eigen::VectorXd numeric(analytic.size());
    Eigen::MatrixXd raw = fc.out;
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
      const double keep = raw.data()[i];
      raw.data()[i] = keep + step;
      const double up = component(compute_loss(raw, b.labels, cm[bit]), bit);
      raw.data()[i] = keep - step;
      const double down = component(compute_loss(raw, b.labels, cm[bit]), bit);
      raw.data()[i] = keep;
      numeric[i] = (up - down) / (2 * step);
    }
    err.head[bit] = relative_error(analytic, numeric);
  }

  std::array<Eigen::VectorXd, 4> analytic, numeric;
  for (int bit = 0; bit < 4; ++bit) {
    Eigen::MatrixXd dout;
    compute_loss(fc.out, b.labels, cm[bit], &dout);
    analytic[bit] = flatten(backward(cfg, weights, fc, dout));
    numeric[bit].resize(analytic[bit].size());
  }
  NetworkWeights w = weights;
  const std::vector<double*> slots = parameter_slots(w);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double keep = *slots[i];
    std::array<double, 4> up{}, down{};
    *slots[i] = keep + step;
    const Eigen::MatrixXd out_up = forward(cfg, w, b.xyz).out;
    *slots[i] = keep - step;
    const Eigen::MatrixXd out_down = forward(cfg, w, b.xyz).out;
    *slots[i] = keep;
    for (int bit = 0; bit < 4; ++bit) {
      up[bit] = component(compute_loss(out_up, b.labels, cm[bit]), bit);
      down[bit] = component(compute_loss(out_down, b.labels, cm[bit]), bit);
      numeric[bit][static_cast<Eigen::Index>(i)] = (up[bit] - down[bit]) / (2 * step);
    }
  }
  for (int bit = 0; bit < 4; ++bit) err.param[bit] = relative_error(analytic[bit], numeric[bit]);
  return err;
}

/// Largest |L(P_rotation) - L(-P_rotation)| over random rotation-masked points.
inline double rotation_sign_asymmetry(int configurations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0;
  for (int t = 0; t < configurations; ++t) {
    Eigen::MatrixXd raw(9, 1);
    for (int k = 0; k < 9; ++k) raw(k, 0) = g(rng) * std::exp(2 * g(rng));
    const Vec3 n = random_unit(rng);
    const Vec3 r = project_out(random_unit(rng), n).normalized();
    const PointLabel l{n.x(), n.y(), n.z(), r.x(), r.y(), r.z(), 1.0, 0.5};
    const PointMask m = kMaskPositive;
    const double a = compute_loss(raw, std::span(&l, 1), std::span(&m, 1)).rotation;
    raw.block<3, 1>(kRotationRow, 0) *= -1.0;
    const double b = compute_loss(raw, std::span(&l, 1), std::span(&m, 1)).rotation;
    worst = std::max(worst, std::abs(a - b));
  }
  return worst;
}

/// Clears mask `bit` at random points and checks, bit for bit, that
/// (a) the other components and every head gradient outside the cleared
/// entries are untouched, (b) the cleared entries carry zero gradient and
/// the remaining parameter gradient equals backpropagating the full head
/// gradient with those entries removed, and (c) garbage labels at the
/// cleared points change nothing. Returns the number of failed comparisons.
inline int mask_gating_failures(const NetworkConfig& cfg, const NetworkWeights& w, const LabeledBatch& b, int bit,
                                std::mt19937_64& rng) {
  static constexpr int kFirstRow[4] = {kNormalRow, kRotationRow, kCategoryRow, kScoreRow};
  static constexpr int kRows[4] = {3, 3, 2, 1};
  const ForwardCache fc = forward(cfg, w, b.xyz);
  Eigen::MatrixXd full_grad;
  const LossBreakdown full = compute_loss(fc.out, b.labels, b.masks, &full_grad);

  std::vector<PointMask> cleared = b.masks;
  std::vector<PointLabel> garbage = b.labels;
  std::vector<int> picked;
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < cleared.size(); ++i)
    if (cleared[i][bit] && coin(rng)) {
      cleared[i][bit] = 0;
      picked.push_back(static_cast<int>(i));
      // Only labels read exclusively by this component may be scrambled.
      if (bit == 1) garbage[i][3] = garbage[i][4] = garbage[i][5] = std::numeric_limits<double>::quiet_NaN();
      if (bit == 2) garbage[i][6] = 1e300;
      if (bit == 3) garbage[i][7] = std::numeric_limits<double>::quiet_NaN();
      if (bit == 0 && !cleared[i][1]) garbage[i][0] = garbage[i][1] = garbage[i][2] = 7.0;
    }

  int failures = 0;
  Eigen::MatrixXd grad, grad_garbage;
  const LossBreakdown part = compute_loss(fc.out, b.labels, cleared, &grad);
  const LossBreakdown part_garbage = compute_loss(fc.out, garbage, cleared, &grad_garbage);
  for (int k = 0; k < 4; ++k)
    if (k != bit && component(part, k) != component(full, k)) ++failures;
  for (int k = 0; k < 4; ++k)
    if (component(part_garbage, k) != component(part, k)) ++failures;
  if (!(grad.array() == grad_garbage.array()).all()) ++failures;

  Eigen::MatrixXd expected = full_grad;
  for (int i : picked) expected.block(kFirstRow[bit], i, kRows[bit], 1).setZero();
  if (!(expected.array() == grad.array()).all()) ++failures;
  const Eigen::VectorXd param = flatten(backward(cfg, w, fc, grad));
  const Eigen::VectorXd param_expected = flatten(backward(cfg, w, fc, expected));
  if (!(param.array() == param_expected.array()).all()) ++failures;

  // The cleared points alone: their component vanishes and its gradient is zero.
  std::vector<PointMask> only_picked(b.masks.size(), PointMask{0, 0, 0, 0});
  for (int i : picked) only_picked[i] = cleared[i];
  for (int i : picked) only_picked[i][bit] = 0;
  Eigen::MatrixXd g_only;
  const LossBreakdown lb_only = compute_loss(fc.out, garbage, masks_for(only_picked, bit), &g_only);
  if (component(lb_only, bit) != 0.0 || !g_only.isZero(0.0)) ++failures;
  return failures;
}

}  // namespace pngrasp::testing
