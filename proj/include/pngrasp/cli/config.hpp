#pragma once

#include "pngrasp/cli/eval.hpp"
#include "pngrasp/scenegen/dataset.hpp"

namespace pngrasp {

inline Json to_json(const GripperModel& g) {
  return Json{{"max_opening", g.max_opening}, {"finger_length", g.finger_length},
              {"finger_thickness", g.finger_thickness}, {"finger_width", g.finger_width},
              {"palm_depth", g.palm_depth}};
}

inline void read_json(const Json& j, GripperModel& g, const std::string& where = "gripper") {
  StrictObject o(j, where);
  o.get("max_opening", g.max_opening);
  o.get("finger_length", g.finger_length);
  o.get("finger_thickness", g.finger_thickness);
  o.get("finger_width", g.finger_width);
  o.get("palm_depth", g.palm_depth);
  o.finish();
}

inline Json to_json(const QualityConfig& q) {
  return Json{{"cone_edges", q.cone_edges}, {"torque_scale", q.torque_scale},
              {"hull_tolerance", q.hull_tolerance}, {"patch_radius", q.patch_radius}};
}

inline void read_json(const Json& j, QualityConfig& q, const std::string& where = "quality") {
  StrictObject o(j, where);
  o.get("cone_edges", q.cone_edges);
  o.get("torque_scale", q.torque_scale);
  o.get("hull_tolerance", q.hull_tolerance);
  o.get("patch_radius", q.patch_radius);
  o.finish();
}

inline Json to_json(const PlannerConfig& p) {
  return Json{{"samples", p.samples},         {"rotations", p.rotations}, {"min_depth", p.min_depth},
              {"supp_step", p.supp_step},     {"mu", p.mu},               {"sweep_limit", p.sweep_limit},
              {"max_depth", p.max_depth},     {"quality", to_json(p.quality)}};
}

inline void read_json(const Json& j, PlannerConfig& p, const std::string& where = "planner") {
  StrictObject o(j, where);
  o.get("samples", p.samples);
  o.get("rotations", p.rotations);
  o.get("min_depth", p.min_depth);
  o.get("supp_step", p.supp_step);
  o.get("mu", p.mu);
  o.get("sweep_limit", p.sweep_limit);
  o.get("max_depth", p.max_depth);
  if (const Json* q = o.child("quality")) read_json(*q, p.quality, where + ".quality");
  o.finish();
}

inline void read_json(const Json& j, PredictConfig& p, const std::string& where = "predict") {
  StrictObject o(j, where);
  o.get("threshold", p.threshold);
  o.get("crop_half", p.crop_half);
  o.get("max_depth", p.max_depth);
  o.finish();
}

inline void read_json(const Json& j, MatchCriterion& m, const std::string& where = "match") {
  StrictObject o(j, where);
  o.get("max_distance", m.max_distance);
  o.get("max_angle", m.max_angle);
  o.finish();
}

/// Every tunable of the command-line tool. A config file may set any
/// subset; unknown sections or keys are errors.
struct ToolConfig {
  GripperModel gripper;
  PlannerConfig planner;
  DatasetConfig dataset;
  NetworkConfig network = NetworkConfig::desk();
  PreprocessConfig preprocess;
  TrainConfig train;
  PredictConfig predict;
  MatchCriterion match;
  double target_precision = 0.99;

  void validate() const {
    require(gripper.is_valid(), ErrorCode::InvalidArgument, "invalid gripper");
    require(planner.is_valid(), ErrorCode::InvalidArgument, "invalid planner configuration");
    require(dataset.is_valid(), ErrorCode::InvalidArgument, "invalid dataset configuration");
    require(network.is_valid(), ErrorCode::InvalidArgument, "invalid network configuration");
    require(preprocess.is_valid(), ErrorCode::InvalidArgument, "invalid preprocessing configuration");
    require(network.points == preprocess.points, ErrorCode::ConfigMismatch,
            "network.points and preprocess.points differ");
    require(train.is_valid(), ErrorCode::InvalidArgument, "invalid training configuration");
    require(predict.is_valid(), ErrorCode::InvalidArgument, "invalid prediction configuration");
    require(match.is_valid(), ErrorCode::InvalidArgument, "invalid match criterion");
    require(target_precision > 0 && target_precision <= 1, ErrorCode::InvalidArgument,
            "target_precision must lie in (0, 1]");
  }
};

inline ToolConfig read_tool_config(const Json& j) {
  ToolConfig c;
  StrictObject o(j, "config");
  if (const Json* s = o.child("gripper")) read_json(*s, c.gripper);
  if (const Json* s = o.child("planner")) read_json(*s, c.planner);
  if (const Json* s = o.child("dataset")) read_json(*s, c.dataset);
  if (const Json* s = o.child("network")) read_json(*s, c.network);
  if (const Json* s = o.child("preprocess")) read_json(*s, c.preprocess);
  if (const Json* s = o.child("train")) read_json(*s, c.train);
  if (const Json* s = o.child("predict")) read_json(*s, c.predict);
  if (const Json* s = o.child("match")) read_json(*s, c.match);
  o.get("target_precision", c.target_precision);
  o.finish();
  c.predict.gripper = c.gripper;
  return c;
}

}  // namespace pngrasp
