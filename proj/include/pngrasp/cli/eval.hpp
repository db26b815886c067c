#pragma once

#include "pngrasp/json_io.hpp"
#include "pngrasp/learner/predict.hpp"
#include "pngrasp/planner/planner.hpp"
#include "pngrasp/scenegen/scene.hpp"

#include <numbers>

namespace pngrasp {

/// Re-scores grasps against the ground-truth scene with the same quality
/// code the planner uses.
class Rescorer {
 public:
  Rescorer(const SceneSpec& scene, const SceneGeometry& geometry, std::span<const ObjectSpec> models,
           const GripperModel& gripper, const QualityConfig& quality = {})
      : geometry_(geometry), all_(geometry.all()), gripper_(gripper), quality_(quality) {
    require(scene.objects.size() == geometry.objects.size(), ErrorCode::InvalidArgument,
            "scene and geometry disagree on the object count");
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
      const PlacedObject& p = scene.objects[i];
      const ObjectSpec& m = models[p.model];
      targets_.push_back(GraspTarget::make(*geometry.objects[i], p.pose.apply(m.centroid), m.mu, quality));
    }
  }

  /// Object whose surface lies closest to the grasp point, or -1 without objects.
  int contacted_object(const Grasp& g) const {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < geometry_.objects.size(); ++i) {
      const double d2 = geometry_.objects[i]->squared_distance(g.point);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  /// Zero on any collision with scene geometry, including the grasped object.
  double operator()(const Grasp& g) const {
    const int obj = contacted_object(g);
    if (obj < 0 || collide(gripper_, g, all_)) return 0.0;
    return grasp_quality(g, targets_[obj], gripper_, quality_).q_c;
  }

 private:
  const SceneGeometry& geometry_;
  std::vector<const IndexedMesh*> all_;
  std::vector<GraspTarget> targets_;
  GripperModel gripper_;
  QualityConfig quality_;
};

struct MatchCriterion {
  double max_distance = 5.0;  // mm
  double max_angle = 15.0;    // degrees between approach axes

  bool is_valid() const { return max_distance > 0 && max_angle > 0; }

  bool matches(const Grasp& prediction, const Grasp& label) const {
    if ((prediction.point - label.point).norm() > max_distance) return false;
    const double c = std::clamp(prediction.approach.dot(label.approach), -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi <= max_angle;
  }
};

struct EvalPrediction {
  Grasp grasp;
  double category = 0;
  double q_c = 0;  // rescored
  int id = -1;     // sample point the prediction came from, -1 if unknown
};

struct EvalLabel {
  Grasp grasp;
  int id = -1;  // index of the label's appended point in the sample
};

struct EvalRow {
  double threshold = 0;
  long predictions = 0;
  long successes = 0;  // kept predictions with rescored q_c > 0
  long matched = 0;    // label grasps matched by a kept prediction
  long labels = 0;

  double precision() const { return predictions ? double(successes) / double(predictions) : 1.0; }
  double recall() const { return labels ? double(matched) / double(labels) : 0.0; }
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double target_precision = 0.99;
  std::optional<std::size_t> selected;  // smallest threshold reaching the target
  MatchCriterion criterion;

  const EvalRow* row_at(double threshold) const {
    for (const EvalRow& r : rows)
      if (r.threshold == threshold) return &r;
    return nullptr;
  }

  bool recall_non_increasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].recall() > rows[i - 1].recall()) return false;
    return true;
  }
};

/// 0, 0.01, ..., 1 plus the category threshold, ascending.
inline std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 100; ++i) t.push_back(i / 100.0);
  t.push_back(kCategoryThreshold);
  std::sort(t.begin(), t.end());
  return t;
}

/// Pools counts over any number of evaluated clouds.
class RahpAccumulator {
 public:
  explicit RahpAccumulator(std::vector<double> thresholds = default_thresholds(), MatchCriterion criterion = {})
      : criterion_(criterion) {
    require(criterion.is_valid(), ErrorCode::InvalidArgument, "invalid match criterion");
    require(!thresholds.empty(), ErrorCode::InvalidArgument, "no thresholds");
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    for (double t : thresholds) rows_.push_back(EvalRow{t});
  }

  void add(std::span<const EvalPrediction> predictions, std::span<const EvalLabel> labels) {
    // A label is recovered at every threshold up to the best category among
    // the predictions matching it, so one pass per label suffices.
    std::vector<double> best(labels.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t l = 0; l < labels.size(); ++l)
      for (const EvalPrediction& p : predictions) {
        const bool same_point = p.id >= 0 && p.id == labels[l].id;
        if (same_point || criterion_.matches(p.grasp, labels[l].grasp)) best[l] = std::max(best[l], p.category);
      }
    for (EvalRow& r : rows_) {
      r.labels += static_cast<long>(labels.size());
      for (const EvalPrediction& p : predictions)
        if (p.category >= r.threshold) {
          ++r.predictions;
          r.successes += p.q_c > 0;
        }
      for (double b : best) r.matched += b >= r.threshold;
    }
  }

  EvalReport report(double target_precision = 0.99) const {
    EvalReport rep;
    rep.rows = rows_;
    rep.target_precision = target_precision;
    rep.criterion = criterion_;
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
      if (rep.rows[i].precision() >= target_precision) {
        rep.selected = i;
        break;
      }
    return rep;
  }

 private:
  std::vector<EvalRow> rows_;
  MatchCriterion criterion_;
};

inline EvalReport rahp(std::span<const EvalPrediction> predictions, std::span<const EvalLabel> labels,
                       const MatchCriterion& criterion = {}, std::vector<double> thresholds = default_thresholds(),
                       double target_precision = 0.99) {
  require(!labels.empty(), ErrorCode::EmptyInput, "no label grasps to evaluate against");
  RahpAccumulator acc(std::move(thresholds), criterion);
  acc.add(predictions, labels);
  return acc.report(target_precision);
}

inline Json to_json(const EvalReport& r) {
  Json rows = Json::array();
  for (const EvalRow& row : r.rows)
    rows.push_back({{"threshold", row.threshold},
                    {"precision", row.precision()},
                    {"recall", row.recall()},
                    {"predictions", row.predictions},
                    {"successes", row.successes},
                    {"matched", row.matched},
                    {"labels", row.labels}});
  Json j{{"target_precision", r.target_precision},
         {"empty_precision_convention", 1.0},
         {"criterion", {{"max_distance_mm", r.criterion.max_distance}, {"max_angle_deg", r.criterion.max_angle}}},
         {"recall_non_increasing", r.recall_non_increasing()},
         {"rows", rows}};
  if (r.selected) {
    const EvalRow& s = r.rows[*r.selected];
    j["selected"] = {{"threshold", s.threshold}, {"precision", s.precision()}, {"recall", s.recall()}};
  } else {
    j["selected"] = nullptr;
    j["note"] = "no threshold reaches the target precision";
  }
  return j;
}

}  // namespace pngrasp
