#pragma once

#include "pngrasp/binary_io.hpp"
#include "pngrasp/json_io.hpp"
#include "pngrasp/learner/loss.hpp"
#include "pngrasp/learner/preprocess.hpp"

#include <cmath>
#include <functional>

namespace pngrasp {

struct TrainConfig {
  double learning_rate = 1e-4;
  double momentum = 0.9;
  double weight_decay = 1.0 / 32.0;  // 2^-5, weights only
  double train_fraction = 0.8;       // the rest is held out
  int epochs = 200;
  int batch = 1;
  int max_samples = 0;  // 0 uses every sample in the manifest
  std::uint64_t seed = 0;
  bool jitter = true;
  LossConfig loss;

  bool is_valid() const {
    return learning_rate > 0 && momentum >= 0 && momentum < 1 && weight_decay >= 0 && train_fraction > 0 &&
           train_fraction <= 1 && epochs >= 0 && batch >= 1 && max_samples >= 0;
  }
};

struct EpochRecord {
  int epoch = 0;
  double total = 0, score = 0, category = 0, normal = 0, rotation = 0;  // mean over training samples
};

struct Checkpoint {
  NetworkConfig network;
  PreprocessConfig preprocess;
  NetworkWeights weights;
  int epoch = 0;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> history;

  static Checkpoint fresh(const NetworkConfig& net, const PreprocessConfig& pre, std::uint64_t seed) {
    require(net.points == pre.points, ErrorCode::ConfigMismatch, "network and preprocessing point counts differ");
    Checkpoint c;
    c.network = net;
    c.preprocess = pre;
    c.weights = init_weights(net, seed);
    c.seed = seed;
    return c;
  }
};

/// Rounds every parameter to float32 precision, the checkpoint storage type.
inline void round_to_float(NetworkWeights& w) {
  w.visit([](Dense& d) {
    for (Eigen::Index i = 0; i < d.W.size(); ++i) d.W.data()[i] = static_cast<float>(d.W.data()[i]);
    for (Eigen::Index i = 0; i < d.b.size(); ++i) d.b.data()[i] = static_cast<float>(d.b.data()[i]);
  });
}

inline Json to_json(const NetworkConfig& c) {
  Json sa = Json::array();
  for (const SaLevelConfig& l : c.sa) sa.push_back({{"centroids", l.centroids}, {"radius", l.radius}, {"widths", l.widths}});
  return Json{{"points", c.points}, {"neighbor_cap", c.neighbor_cap}, {"sa", sa}, {"fp", c.fp}, {"head_hidden", c.head_hidden}};
}

inline void read_json(const Json& j, NetworkConfig& c, const std::string& where = "network") {
  StrictObject o(j, where);
  if (const Json* preset = o.child("preset")) {
    const std::string name = preset->get<std::string>();
    if (name == "desk") c = NetworkConfig::desk();
    else if (name == "full") c = NetworkConfig::full();
    else fail(ErrorCode::Format, where + ".preset: unknown preset '" + name + "'");
  }
  o.get("points", c.points);
  o.get("neighbor_cap", c.neighbor_cap);
  o.get("fp", c.fp);
  o.get("head_hidden", c.head_hidden);
  if (const Json* sa = o.child("sa")) {
    if (!sa->is_array()) fail(ErrorCode::Format, where + ".sa: expected an array");
    c.sa.clear();
    for (const Json& l : *sa) {
      SaLevelConfig level;
      StrictObject ol(l, where + ".sa[]");
      ol.get("centroids", level.centroids);
      ol.get("radius", level.radius);
      ol.get("widths", level.widths);
      ol.finish();
      c.sa.push_back(level);
    }
  }
  o.finish();
}

inline Json to_json(const PreprocessConfig& c) {
  return Json{{"scale", c.scale}, {"jitter", c.jitter}, {"points", c.points}};
}

inline void read_json(const Json& j, PreprocessConfig& c, const std::string& where = "preprocess") {
  StrictObject o(j, where);
  o.get("scale", c.scale);
  o.get("jitter", c.jitter);
  o.get("points", c.points);
  o.finish();
}

inline Json to_json(const TrainConfig& c) {
  return Json{{"learning_rate", c.learning_rate}, {"momentum", c.momentum}, {"weight_decay", c.weight_decay},
              {"train_fraction", c.train_fraction}, {"epochs", c.epochs},     {"batch", c.batch},
              {"max_samples", c.max_samples},     {"seed", c.seed},         {"jitter", c.jitter},
              {"per_mask_normalization", c.loss.per_mask_normalization}};
}

inline void read_json(const Json& j, TrainConfig& c, const std::string& where = "train") {
  StrictObject o(j, where);
  o.get("learning_rate", c.learning_rate);
  o.get("momentum", c.momentum);
  o.get("weight_decay", c.weight_decay);
  o.get("train_fraction", c.train_fraction);
  o.get("epochs", c.epochs);
  o.get("batch", c.batch);
  o.get("max_samples", c.max_samples);
  o.get("seed", c.seed);
  o.get("jitter", c.jitter);
  o.get("per_mask_normalization", c.loss.per_mask_normalization);
  o.finish();
}

inline constexpr std::string_view kCheckpointMagic = "PNGC";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Magic, version, JSON config block, float32 tensors in visit order, then
/// training metadata. Weights must already be float-representable.
inline std::string encode_checkpoint(const Checkpoint& c) {
  BinaryWriter w;
  w.put_bytes(kCheckpointMagic);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put_string(Json{{"network", to_json(c.network)}, {"preprocess", to_json(c.preprocess)}}.dump());
  c.weights.visit([&](const Dense& d) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(d.W.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(d.W.cols()));
    // Row-major on disk.
    for (Eigen::Index r = 0; r < d.W.rows(); ++r)
      for (Eigen::Index k = 0; k < d.W.cols(); ++k) {
        const float f = static_cast<float>(d.W(r, k));
        require(static_cast<double>(f) == d.W(r, k), ErrorCode::InvalidArgument,
                "checkpoint weights must be rounded to float32 first");
        w.put<float>(f);
      }
    for (Eigen::Index r = 0; r < d.b.size(); ++r) w.put<float>(static_cast<float>(d.b[r]));
  });
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.epoch));
  w.put<std::uint64_t>(c.seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.history.size()));
  for (const EpochRecord& e : c.history) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(e.epoch));
    for (double x : {e.total, e.score, e.category, e.normal, e.rotation}) w.put<double>(x);
  }
  return w.data();
}

inline Checkpoint decode_checkpoint(const std::string& bytes) {
  BinaryReader r(bytes);
  r.expect_magic(kCheckpointMagic);
  if (r.get<std::uint32_t>() != kCheckpointVersion) fail(ErrorCode::Format, "unsupported checkpoint version");
  Checkpoint c;
  Json cfg;
  try {
    cfg = Json::parse(r.get_string());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("bad checkpoint config block: ") + e.what());
  }
  read_json(cfg.at("network"), c.network);
  read_json(cfg.at("preprocess"), c.preprocess);
  require(c.network.is_valid() && c.preprocess.is_valid(), ErrorCode::Format, "checkpoint holds an invalid config");
  c.weights = init_weights(c.network, 0);
  c.weights.visit([&](Dense& d) {
    const auto rows = r.get<std::uint32_t>(), cols = r.get<std::uint32_t>();
    if (rows != d.W.rows() || cols != d.W.cols()) fail(ErrorCode::ConfigMismatch, "checkpoint tensor shape mismatch");
    for (Eigen::Index i = 0; i < d.W.rows(); ++i)
      for (Eigen::Index k = 0; k < d.W.cols(); ++k) d.W(i, k) = r.get<float>();
    for (Eigen::Index i = 0; i < d.b.size(); ++i) d.b[i] = r.get<float>();
  });
  c.epoch = static_cast<int>(r.get<std::uint32_t>());
  c.seed = r.get<std::uint64_t>();
  const auto n = r.get<std::uint32_t>();
  if (r.remaining() != static_cast<std::size_t>(n) * (4 + 5 * 8)) fail(ErrorCode::Format, "checkpoint history is truncated");
  for (std::uint32_t i = 0; i < n; ++i) {
    EpochRecord e;
    e.epoch = static_cast<int>(r.get<std::uint32_t>());
    e.total = r.get<double>();
    e.score = r.get<double>();
    e.category = r.get<double>();
    e.normal = r.get<double>();
    e.rotation = r.get<double>();
    c.history.push_back(e);
  }
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_binary_file(path, encode_checkpoint(c));
}
inline Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_binary_file(path)); }

/// One sample resampled into network input with labels and masks in tow.
struct NetworkBatchItem {
  PreparedCloud cloud;
  std::vector<PointLabel> labels;
  std::vector<PointMask> masks;
};

inline NetworkBatchItem prepare_item(const TrainingSample& s, const PreprocessConfig& cfg, std::uint64_t seed,
                                     bool jitter) {
  NetworkBatchItem item;
  item.cloud = preprocess(s.points, cfg, seed, jitter);
  item.labels.reserve(item.cloud.source.size());
  item.masks.reserve(item.cloud.source.size());
  for (int i : item.cloud.source) {
    item.labels.push_back(s.labels[i]);
    item.masks.push_back(s.masks[i]);
  }
  return item;
}

/// SGD with momentum; weight decay applies to weight matrices, not biases.
class SgdMomentum {
 public:
  SgdMomentum(const NetworkWeights& like, const TrainConfig& cfg)
      : velocity_(like.zeros_like()), lr_(cfg.learning_rate), mu_(cfg.momentum), wd_(cfg.weight_decay) {}

  void step(NetworkWeights& w, const NetworkWeights& grad) {
    std::vector<const Dense*> g;
    grad.visit([&](const Dense& d) { g.push_back(&d); });
    std::vector<Dense*> v;
    velocity_.visit([&](Dense& d) { v.push_back(&d); });
    std::size_t k = 0;
    w.visit([&](Dense& d) {
      v[k]->W = mu_ * v[k]->W + g[k]->W + wd_ * d.W;
      v[k]->b = mu_ * v[k]->b + g[k]->b;
      d.W -= lr_ * v[k]->W;
      d.b -= lr_ * v[k]->b;
      ++k;
    });
  }

 private:
  NetworkWeights velocity_;
  double lr_, mu_, wd_;
};

/// Loss and gradient for one prepared item.
inline LossBreakdown loss_and_gradient(const Checkpoint& c, const NetworkBatchItem& item, NetworkWeights* grad,
                                       const LossConfig& lcfg = {}) {
  const ForwardCache fc = forward(c.network, c.weights, item.cloud.xyz);
  Eigen::MatrixXd dout;
  const LossBreakdown lb = compute_loss(fc.out, item.labels, item.masks, grad ? &dout : nullptr, lcfg);
  if (grad) *grad = backward(c.network, c.weights, fc, dout);
  return lb;
}

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> held_out;
};

/// Seeded shuffle of sample indices, then the first fraction trains.
inline SplitIndices split_samples(int count, double train_fraction, std::uint64_t seed) {
  std::vector<int> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 0x5117));
  for (int i = count - 1; i > 0; --i) std::swap(idx[i], idx[std::uniform_int_distribution<int>(0, i)(rng)]);
  const int n_train = std::clamp(static_cast<int>(std::lround(train_fraction * count)), 1, count);
  return {std::vector<int>(idx.begin(), idx.begin() + n_train), std::vector<int>(idx.begin() + n_train, idx.end())};
}

/// Trains in place. Each epoch visits the training samples in a seeded
/// order; batches average per-sample gradients. Workers only assemble the
/// per-sample gradients, which are summed in a fixed order, so the result
/// does not depend on `jobs`. `on_epoch` may log.
inline void train(Checkpoint& c, std::span<const TrainingSample> samples, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {}, int jobs = 1) {
  require(cfg.is_valid(), ErrorCode::InvalidArgument, "invalid training configuration");
  require(!samples.empty(), ErrorCode::EmptyInput, "no training samples");
  SgdMomentum opt(c.weights, cfg);
  std::vector<int> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  int batch_id = 0;
  for (int e = 0; e < cfg.epochs; ++e) {
    const int epoch = c.epoch + 1;
    std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      std::vector<NetworkWeights> grads(end - start);
      std::vector<LossBreakdown> losses(end - start);
      parallel_for(end - start, jobs, [&](std::size_t k) {
        const int s = order[start + k];
        const NetworkBatchItem item = prepare_item(
            samples[s], c.preprocess, derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), s + 1), cfg.jitter);
        losses[k] = loss_and_gradient(c, item, &grads[k], cfg.loss);
      });
      NetworkWeights sum = c.weights.zeros_like();
      for (std::size_t k = 0; k < grads.size(); ++k) {
        const LossBreakdown& lb = losses[k];
        if (!std::isfinite(lb.total))
          fail(ErrorCode::NonFiniteLoss, "non-finite loss in batch " + std::to_string(batch_id) + " (epoch " +
                                             std::to_string(epoch) + ", sample " + std::to_string(order[start + k]) +
                                             ")");
        rec.total += lb.total;
        rec.score += lb.score;
        rec.category += lb.category;
        rec.normal += lb.normal;
        rec.rotation += lb.rotation;
        std::vector<Dense*> acc;
        sum.visit([&](Dense& d) { acc.push_back(&d); });
        std::size_t t = 0;
        grads[k].visit([&](const Dense& d) {
          acc[t]->W += d.W;
          acc[t]->b += d.b;
          ++t;
        });
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      sum.visit([&](Dense& d) {
        d.W *= inv;
        d.b *= inv;
      });
      opt.step(c.weights, sum);
      ++batch_id;
    }
    const double n = static_cast<double>(samples.size());
    rec.total /= n;
    rec.score /= n;
    rec.category /= n;
    rec.normal /= n;
    rec.rotation /= n;
    c.epoch = epoch;
    c.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  round_to_float(c.weights);
}

/// Jitter-free forward pass; heads are indexed like `item.cloud.source`.
inline HeadOutputs infer(const Checkpoint& c, const PreparedCloud& cloud) {
  return decode_heads(forward(c.network, c.weights, cloud.xyz).out);
}

inline HeadMetrics evaluate_sample(const Checkpoint& c, const TrainingSample& s, std::uint64_t seed,
                                   double threshold = 0.5) {
  const NetworkBatchItem item = prepare_item(s, c.preprocess, seed, false);
  return head_metrics(infer(c, item.cloud), item.labels, item.masks, threshold);
}

}  // namespace pngrasp
