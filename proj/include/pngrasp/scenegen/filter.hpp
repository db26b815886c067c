#pragma once

#include "pngrasp/planner/planner.hpp"
#include "pngrasp/scenegen/scene.hpp"

namespace pngrasp {

struct ScenePositive {
  int object = 0;  // index into SceneSpec::objects
  ScoredGrasp grasp;
  bool fallback = false;  // a supplementary replaced the blocked major
};

struct SceneNegative {
  int object = 0;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // approach direction
};

struct FilteredGrasps {
  std::vector<ScenePositive> positives;
  std::vector<SceneNegative> negatives;  // blocked majors, then planner negatives
  int blocked = 0;                       // majors with no clear alternative
};

/// Checks every planned grasp against the composed scene (all objects plus
/// the ground). `grasp_sets[k]` belongs to model k of the composer's list.
inline FilteredGrasps scene_grasp_filter(const SceneSpec& scene, const SceneGeometry& geometry,
                                         std::span<const SingleObjectGraspSet> grasp_sets,
                                         const GripperModel& gripper) {
  const auto meshes = geometry.all();
  FilteredGrasps out;
  std::vector<SceneNegative> planner_negatives;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const PlacedObject& obj = scene.objects[i];
    require(obj.model >= 0 && obj.model < static_cast<int>(grasp_sets.size()), ErrorCode::InvalidArgument,
            "no grasp set for object " + obj.id);
    const SingleObjectGraspSet& set = grasp_sets[obj.model];
    const int oi = static_cast<int>(i);
    for (const MajorGrasp& m : set.majors) {
      const ScoredGrasp major{m.major.grasp.transformed(obj.pose), m.major.q_c};
      if (!collide(gripper, major.grasp, meshes)) {
        out.positives.push_back({oi, major, false});
        continue;
      }
      // Supplementaries are stored best first, so the first clear one wins.
      bool found = false;
      for (const ScoredGrasp& s : m.supplementary) {
        const ScoredGrasp g{s.grasp.transformed(obj.pose), s.q_c};
        if (!collide(gripper, g.grasp, meshes)) {
          out.positives.push_back({oi, g, true});
          found = true;
          break;
        }
      }
      if (!found) {
        ++out.blocked;
        out.negatives.push_back({oi, major.grasp.point, major.grasp.approach});
      }
    }
    for (const NegativePoint& n : set.negatives)
      planner_negatives.push_back({oi, obj.pose.apply(n.point), obj.pose.rotate(n.normal)});
  }
  out.negatives.insert(out.negatives.end(), planner_negatives.begin(), planner_negatives.end());
  return out;
}

}  // namespace pngrasp
