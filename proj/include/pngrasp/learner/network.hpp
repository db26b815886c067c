#pragma once

#include "pngrasp/common.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <random>

namespace pngrasp {

struct SaLevelConfig {
  int centroids = 0;    // K
  double radius = 0.0;  // in scaled units
  std::vector<int> widths;
};

/// Set-abstraction levels (fine to coarse), one feature-propagation level
/// per set-abstraction level (coarse to fine), then two per-point linear
/// layers emitting [score | category(2) | normal(3) | rotation(3)].
struct NetworkConfig {
  int points = 8192;
  int neighbor_cap = 32;
  std::vector<SaLevelConfig> sa;
  std::vector<std::vector<int>> fp;
  int head_hidden = 32;

  static constexpr int kScoreChannels = 1;
  static constexpr int kCategoryChannels = 2;
  static constexpr int kNormalChannels = 3;
  static constexpr int kRotationChannels = 3;
  static constexpr int kHeadChannels = kScoreChannels + kCategoryChannels + kNormalChannels + kRotationChannels;

  static NetworkConfig desk() {
    NetworkConfig c;
    c.sa = {{256, 0.1, {16, 16, 32}}, {64, 0.3, {32, 32, 64}}};
    c.fp = {{64, 64}, {64, 32}};
    c.head_hidden = 32;
    return c;
  }

  static NetworkConfig full() {
    NetworkConfig c;
    c.sa = {{1024, 0.1, {32, 32, 64}}, {256, 0.3, {64, 64, 128}}, {64, 0.5, {128, 128, 256}}, {16, 1.0, {256, 256, 512}}};
    c.fp = {{256, 256}, {256, 256}, {256, 128}, {128, 128, 128}};
    c.head_hidden = 128;
    return c;
  }

  bool is_valid() const {
    if (points < 1 || neighbor_cap < 1 || head_hidden < 1 || sa.empty() || fp.size() != sa.size()) return false;
    for (std::size_t i = 0; i < sa.size(); ++i) {
      if (sa[i].centroids < 1 || sa[i].radius <= 0 || sa[i].widths.empty()) return false;
      if (i > 0 && (sa[i].centroids >= sa[i - 1].centroids || sa[i].radius <= sa[i - 1].radius)) return false;
      for (int w : sa[i].widths)
        if (w < 1) return false;
    }
    for (const auto& level : fp) {
      if (level.empty()) return false;
      for (int w : level)
        if (w < 1) return false;
    }
    return true;
  }

  int sa_channels(int level) const { return level == 0 ? 0 : sa[level - 1].widths.back(); }
};

struct Dense {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
};

/// All trainable tensors. `visit` walks them in a fixed order shared by the
/// optimizer and the checkpoint format.
struct NetworkWeights {
  std::vector<std::vector<Dense>> sa;
  std::vector<std::vector<Dense>> fp;
  Dense head1, head2;

  template <class F>
  void visit(F&& f) {
    for (auto& level : sa)
      for (Dense& d : level) f(d);
    for (auto& level : fp)
      for (Dense& d : level) f(d);
    f(head1);
    f(head2);
  }
  template <class F>
  void visit(F&& f) const {
    const_cast<NetworkWeights*>(this)->visit([&](Dense& d) { f(static_cast<const Dense&>(d)); });
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    visit([&](const Dense& d) { n += static_cast<std::size_t>(d.W.size() + d.b.size()); });
    return n;
  }

  NetworkWeights zeros_like() const {
    NetworkWeights z = *this;
    z.visit([](Dense& d) {
      d.W.setZero();
      d.b.setZero();
    });
    return z;
  }
};

namespace detail {

inline Dense make_dense(int in, int out, double bound, std::mt19937_64& rng) {
  Dense d;
  d.W.resize(out, in);
  std::uniform_real_distribution<double> u(-bound, bound);
  // Float-representable values so a float32 checkpoint reproduces them exactly.
  for (Eigen::Index i = 0; i < d.W.size(); ++i) d.W.data()[i] = static_cast<float>(u(rng));
  d.b = Eigen::VectorXd::Zero(out);
  return d;
}

}  // namespace detail

/// Fan-in scaled uniform weights (He bound for ReLU layers, LeCun bound for
/// the output layer), zero biases.
inline NetworkWeights init_weights(const NetworkConfig& cfg, std::uint64_t seed) {
  require(cfg.is_valid(), ErrorCode::InvalidArgument, "invalid network configuration");
  std::mt19937_64 rng(seed);
  NetworkWeights w;
  auto relu_layer = [&](int in, int out) { return detail::make_dense(in, out, std::sqrt(6.0 / in), rng); };
  const int L = static_cast<int>(cfg.sa.size());
  for (int l = 1; l <= L; ++l) {
    std::vector<Dense> layers;
    int in = 3 + cfg.sa_channels(l - 1);
    for (int width : cfg.sa[l - 1].widths) {
      layers.push_back(relu_layer(in, width));
      in = width;
    }
    w.sa.push_back(std::move(layers));
  }
  for (int k = 0; k < L; ++k) {
    const int fine = L - k - 1;
    const int coarse_ch = k == 0 ? cfg.sa_channels(L) : cfg.fp[k - 1].back();
    const int skip_ch = fine == 0 ? 3 : cfg.sa_channels(fine);
    std::vector<Dense> layers;
    int in = coarse_ch + skip_ch;
    for (int width : cfg.fp[k]) {
      layers.push_back(relu_layer(in, width));
      in = width;
    }
    w.fp.push_back(std::move(layers));
  }
  w.head1 = relu_layer(cfg.fp.back().back(), cfg.head_hidden);
  w.head2 = detail::make_dense(cfg.head_hidden, NetworkConfig::kHeadChannels, std::sqrt(3.0 / cfg.head_hidden), rng);
  return w;
}

inline bool same_shape(const NetworkWeights& a, const NetworkWeights& b) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> sa_shapes, sb_shapes;
  a.visit([&](const Dense& d) { sa_shapes.emplace_back(d.W.rows(), d.W.cols()); });
  b.visit([&](const Dense& d) { sb_shapes.emplace_back(d.W.rows(), d.W.cols()); });
  return sa_shapes == sb_shapes;
}

/// Sampling and grouping for one input cloud; independent of the weights.
struct PointHierarchy {
  struct Grouping {
    std::vector<int> centroids;  // indices into the finer level
    std::vector<int> offsets;    // members of group g: [offsets[g], offsets[g + 1])
    std::vector<int> members;
  };
  struct Interpolation {
    std::vector<std::array<int, 3>> index;  // into the coarser level
    std::vector<std::array<double, 3>> weight;
    int k = 0;  // neighbors used (min(3, coarse size))
  };

  std::vector<Eigen::Matrix3Xd> xyz;  // level 0 is the input
  std::vector<Grouping> groups;       // groups[l - 1] builds level l
  std::vector<Interpolation> interp;  // interp[k] feeds FP level k
};

namespace detail {

// Purely geometric total order used for every tie-break.
inline bool geometric_less(const Eigen::Matrix3Xd& p, int a, int b) {
  for (int k = 0; k < 3; ++k)
    if (p(k, a) != p(k, b)) return p(k, a) < p(k, b);
  return false;
}

inline std::vector<int> farthest_point_sampling(const Eigen::Matrix3Xd& p, int count) {
  const int n = static_cast<int>(p.cols());
  std::vector<int> out;
  out.reserve(count);
  int start = 0;
  for (int i = 1; i < n; ++i) {
    const double si = p.col(i).sum(), ss = p.col(start).sum();
    if (si > ss || (si == ss && geometric_less(p, start, i))) start = i;
  }
  std::vector<double> d(n, std::numeric_limits<double>::infinity());
  int cur = start;
  for (int k = 0; k < count; ++k) {
    out.push_back(cur);
    int next = -1;
    for (int i = 0; i < n; ++i) {
      d[i] = std::min(d[i], (p.col(i) - p.col(cur)).squaredNorm());
      if (next < 0 || d[i] > d[next] || (d[i] == d[next] && geometric_less(p, next, i))) next = i;
    }
    cur = next;
  }
  return out;
}

}  // namespace detail

inline PointHierarchy build_hierarchy(const Eigen::Matrix3Xd& input, const NetworkConfig& cfg) {
  require(input.cols() == cfg.points, ErrorCode::ConfigMismatch,
          "network expects " + std::to_string(cfg.points) + " points, got " + std::to_string(input.cols()));
  PointHierarchy h;
  h.xyz.push_back(input);
  for (const SaLevelConfig& level : cfg.sa) {
    const Eigen::Matrix3Xd& prev = h.xyz.back();
    const int n = static_cast<int>(prev.cols());
    PointHierarchy::Grouping g;
    g.centroids = detail::farthest_point_sampling(prev, std::min(level.centroids, n));
    g.offsets.push_back(0);
    const double r2 = level.radius * level.radius;
    std::vector<std::pair<double, int>> near;
    for (int c : g.centroids) {
      near.clear();
      for (int i = 0; i < n; ++i) {
        const double d2 = (prev.col(i) - prev.col(c)).squaredNorm();
        if (d2 <= r2) near.emplace_back(d2, i);
      }
      const std::size_t keep = std::min<std::size_t>(near.size(), static_cast<std::size_t>(cfg.neighbor_cap));
      std::partial_sort(near.begin(), near.begin() + static_cast<std::ptrdiff_t>(keep), near.end(),
                        [&](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first < b.first;
                          return detail::geometric_less(prev, a.second, b.second);
                        });
      for (std::size_t j = 0; j < keep; ++j) g.members.push_back(near[j].second);
      g.offsets.push_back(static_cast<int>(g.members.size()));
    }
    Eigen::Matrix3Xd next(3, static_cast<Eigen::Index>(g.centroids.size()));
    for (std::size_t j = 0; j < g.centroids.size(); ++j) next.col(static_cast<Eigen::Index>(j)) = prev.col(g.centroids[j]);
    h.groups.push_back(std::move(g));
    h.xyz.push_back(std::move(next));
  }
  const int L = static_cast<int>(cfg.sa.size());
  for (int k = 0; k < L; ++k) {
    const Eigen::Matrix3Xd& coarse = h.xyz[L - k];
    const Eigen::Matrix3Xd& fine = h.xyz[L - k - 1];
    PointHierarchy::Interpolation it;
    it.k = static_cast<int>(std::min<Eigen::Index>(3, coarse.cols()));
    it.index.resize(fine.cols());
    it.weight.resize(fine.cols());
    for (Eigen::Index f = 0; f < fine.cols(); ++f) {
      std::array<std::pair<double, int>, 3> best;
      best.fill({std::numeric_limits<double>::infinity(), -1});
      for (int c = 0; c < coarse.cols(); ++c) {
        const double d2 = (coarse.col(c) - fine.col(f)).squaredNorm();
        std::pair<double, int> cand{d2, c};
        for (int s = 0; s < it.k; ++s) {
          const bool better = best[s].second < 0 || cand.first < best[s].first ||
                              (cand.first == best[s].first && detail::geometric_less(coarse, cand.second, best[s].second));
          if (better) std::swap(cand, best[s]);
        }
      }
      double total = 0;
      for (int s = 0; s < it.k; ++s) {
        it.index[f][s] = best[s].second;
        it.weight[f][s] = 1.0 / (best[s].first + 1e-8);
        total += it.weight[f][s];
      }
      for (int s = 0; s < it.k; ++s) it.weight[f][s] /= total;
    }
    h.interp.push_back(std::move(it));
  }
  return h;
}

/// Activations kept for the backward pass.
struct ForwardCache {
  PointHierarchy hierarchy;
  std::vector<Eigen::MatrixXd> features;                 // features[l], channels x points of level l
  std::vector<std::vector<Eigen::MatrixXd>> sa_acts;     // per level: input, then each layer output
  std::vector<Eigen::MatrixXi> sa_argmax;                // per level: channel x group -> column
  std::vector<std::vector<Eigen::MatrixXd>> fp_acts;     // per FP level: input, then each layer output
  Eigen::MatrixXd head_hidden;
  Eigen::MatrixXd out;  // 9 x N raw head channels
};

namespace detail {

inline void mlp_forward(const std::vector<Dense>& layers, std::vector<Eigen::MatrixXd>& acts) {
  for (const Dense& d : layers) {
    Eigen::MatrixXd z = d.W * acts.back();
    z.colwise() += d.b;
    acts.push_back(z.cwiseMax(0.0));
  }
}

// Accumulates layer gradients; returns the gradient at the MLP input.
inline Eigen::MatrixXd mlp_backward(const std::vector<Dense>& layers, const std::vector<Eigen::MatrixXd>& acts,
                                    Eigen::MatrixXd grad, std::vector<Dense>& dlayers) {
  for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
    grad = (acts[i + 1].array() > 0.0).select(grad, 0.0);
    dlayers[i].W.noalias() += grad * acts[i].transpose();
    dlayers[i].b += grad.rowwise().sum();
    grad = layers[i].W.transpose() * grad;
  }
  return grad;
}

}  // namespace detail

inline ForwardCache forward(const NetworkConfig& cfg, const NetworkWeights& w, const Eigen::Matrix3Xd& input) {
  require(cfg.is_valid(), ErrorCode::InvalidArgument, "invalid network configuration");
  require(w.sa.size() == cfg.sa.size() && w.fp.size() == cfg.fp.size(), ErrorCode::ConfigMismatch,
          "weights do not match the network configuration");
  ForwardCache c;
  c.hierarchy = build_hierarchy(input, cfg);
  const PointHierarchy& h = c.hierarchy;
  const int L = static_cast<int>(cfg.sa.size());
  c.features.resize(L + 1);
  c.features[0].resize(0, input.cols());
  for (int l = 1; l <= L; ++l) {
    const auto& g = h.groups[l - 1];
    const Eigen::Matrix3Xd& prev = h.xyz[l - 1];
    const Eigen::MatrixXd& fprev = c.features[l - 1];
    const int cin = static_cast<int>(fprev.rows());
    Eigen::MatrixXd x(3 + cin, static_cast<Eigen::Index>(g.members.size()));
    const double inv_r = 1.0 / cfg.sa[l - 1].radius;
    for (std::size_t grp = 0; grp < g.centroids.size(); ++grp) {
      const Vec3 center = prev.col(g.centroids[grp]);
      for (int t = g.offsets[grp]; t < g.offsets[grp + 1]; ++t) {
        const int m = g.members[t];
        x.block<3, 1>(0, t) = (prev.col(m) - center) * inv_r;
        if (cin) x.block(3, t, cin, 1) = fprev.col(m);
      }
    }
    std::vector<Eigen::MatrixXd> acts{std::move(x)};
    detail::mlp_forward(w.sa[l - 1], acts);
    const Eigen::MatrixXd& last = acts.back();
    const Eigen::Index groups = static_cast<Eigen::Index>(g.centroids.size());
    Eigen::MatrixXd pooled(last.rows(), groups);
    Eigen::MatrixXi arg(last.rows(), groups);
    for (Eigen::Index grp = 0; grp < groups; ++grp) {
      for (Eigen::Index ch = 0; ch < last.rows(); ++ch) {
        int best = g.offsets[grp];
        for (int t = best + 1; t < g.offsets[grp + 1]; ++t)
          if (last(ch, t) > last(ch, best)) best = t;
        pooled(ch, grp) = last(ch, best);
        arg(ch, grp) = best;
      }
    }
    c.features[l] = std::move(pooled);
    c.sa_acts.push_back(std::move(acts));
    c.sa_argmax.push_back(std::move(arg));
  }
  const Eigen::MatrixXd* coarse_feat = &c.features[L];
  for (int k = 0; k < L; ++k) {
    const int fine = L - k - 1;
    const auto& it = h.interp[k];
    const Eigen::Index nf = h.xyz[fine].cols();
    const Eigen::Index cc = coarse_feat->rows();
    const Eigen::MatrixXd skip = fine == 0 ? Eigen::MatrixXd(h.xyz[0]) : c.features[fine];
    Eigen::MatrixXd x(cc + skip.rows(), nf);
    for (Eigen::Index f = 0; f < nf; ++f) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(cc);
      for (int s = 0; s < it.k; ++s) v += it.weight[f][s] * coarse_feat->col(it.index[f][s]);
      x.block(0, f, cc, 1) = v;
    }
    x.bottomRows(skip.rows()) = skip;
    std::vector<Eigen::MatrixXd> acts{std::move(x)};
    detail::mlp_forward(w.fp[k], acts);
    c.fp_acts.push_back(std::move(acts));
    coarse_feat = &c.fp_acts.back().back();
  }
  Eigen::MatrixXd z = w.head1.W * c.fp_acts.back().back();
  z.colwise() += w.head1.b;
  c.head_hidden = z.cwiseMax(0.0);
  c.out = w.head2.W * c.head_hidden;
  c.out.colwise() += w.head2.b;
  return c;
}

/// Parameter gradients for a gradient at the raw head channels.
inline NetworkWeights backward(const NetworkConfig& cfg, const NetworkWeights& w, const ForwardCache& c,
                               const Eigen::MatrixXd& dout) {
  NetworkWeights g = w.zeros_like();
  const PointHierarchy& h = c.hierarchy;
  const int L = static_cast<int>(cfg.sa.size());

  g.head2.W.noalias() += dout * c.head_hidden.transpose();
  g.head2.b += dout.rowwise().sum();
  Eigen::MatrixXd dh = w.head2.W.transpose() * dout;
  dh = (c.head_hidden.array() > 0.0).select(dh, 0.0);
  g.head1.W.noalias() += dh * c.fp_acts.back().back().transpose();
  g.head1.b += dh.rowwise().sum();
  Eigen::MatrixXd dcur = w.head1.W.transpose() * dh;

  std::vector<Eigen::MatrixXd> dfeat(L + 1);
  for (int l = 1; l <= L; ++l) dfeat[l] = Eigen::MatrixXd::Zero(c.features[l].rows(), c.features[l].cols());
  for (int k = L - 1; k >= 0; --k) {
    const int fine = L - k - 1;
    const Eigen::MatrixXd din = detail::mlp_backward(w.fp[k], c.fp_acts[k], std::move(dcur), g.fp[k]);
    const Eigen::Index cc = k == 0 ? c.features[L].rows() : c.fp_acts[k - 1].back().rows();
    if (fine > 0) dfeat[fine] += din.bottomRows(din.rows() - cc);
    const Eigen::Index ncoarse = h.xyz[L - k].cols();
    Eigen::MatrixXd dcoarse = Eigen::MatrixXd::Zero(cc, ncoarse);
    const auto& it = h.interp[k];
    for (Eigen::Index f = 0; f < din.cols(); ++f)
      for (int s = 0; s < it.k; ++s) dcoarse.col(it.index[f][s]) += it.weight[f][s] * din.block(0, f, cc, 1);
    if (k == 0) dfeat[L] += dcoarse;
    else dcur = std::move(dcoarse);
  }
  for (int l = L; l >= 1; --l) {
    const auto& acts = c.sa_acts[l - 1];
    const Eigen::MatrixXi& arg = c.sa_argmax[l - 1];
    Eigen::MatrixXd dlast = Eigen::MatrixXd::Zero(acts.back().rows(), acts.back().cols());
    for (Eigen::Index grp = 0; grp < arg.cols(); ++grp)
      for (Eigen::Index ch = 0; ch < arg.rows(); ++ch) dlast(ch, arg(ch, grp)) += dfeat[l](ch, grp);
    const Eigen::MatrixXd dx = detail::mlp_backward(w.sa[l - 1], acts, std::move(dlast), g.sa[l - 1]);
    if (l > 1) {
      const auto& grp = h.groups[l - 1];
      const Eigen::Index cin = dx.rows() - 3;
      for (std::size_t t = 0; t < grp.members.size(); ++t)
        dfeat[l - 1].col(grp.members[t]) += dx.block(3, static_cast<Eigen::Index>(t), cin, 1);
    }
  }
  return g;
}

}  // namespace pngrasp
