#include <gtest/gtest.h>

#include "pngrasp/planner.hpp"
#include "pngrasp/scenegen.hpp"
#include "test_support.hpp"

#include <filesystem>

using namespace pngrasp;
using namespace pngrasp::testing;

namespace {

// Strict interior test by support functions over many directions.
bool strictly_inside_2d(const std::vector<Eigen::Vector2d>& pts, const Eigen::Vector2d& q, double margin) {
  for (int k = 0; k < 3600; ++k) {
    const double a = 2 * std::numbers::pi * k / 3600;
    const Eigen::Vector2d u(std::cos(a), std::sin(a));
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : pts) best = std::max(best, u.dot(p - q));
    if (best <= margin) return false;
  }
  return true;
}

// Parity of crossings along a fixed oblique ray.
bool inside_mesh(const TriMesh& m, const Vec3& p) {
  const Vec3 dir = Vec3(0.5377, 0.8622, 0.1234).normalized();
  int hits = 0;
  for (std::size_t t = 0; t < m.size(); ++t)
    if (intersect_ray_triangle(p, dir, m.corner(t, 0), m.corner(t, 1), m.corner(t, 2))) ++hits;
  return hits % 2 == 1;
}

double distance_to_surface(const TriMesh& m, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < m.size(); ++t)
    best = std::min(best, (closest_point_on_triangle(p, m.corner(t, 0), m.corner(t, 1), m.corner(t, 2)) - p).norm());
  return best;
}

std::vector<ObjectSpec> mixed_models() {
  std::vector<ObjectSpec> out;
  out.push_back(ObjectSpec::make("cube40", make_cube(40)));
  out.push_back(ObjectSpec::make("box", make_box(30, 50, 70)));
  out.push_back(ObjectSpec::make("cyl", make_cylinder(18, 60, 16)));
  out.push_back(ObjectSpec::make("ball", make_sphere(22, 12)));
  return out;
}

TriMesh sheared_box() {
  const TriMesh b = make_cube(10);
  std::vector<Vec3> v = b.vertices();
  for (Vec3& p : v) p.x() += 4.0 * (p.z() + 5.0);
  return TriMesh(v, b.triangles());
}

SingleObjectGraspSet hand_set(const std::vector<std::pair<Vec3, double>>& grasps) {
  // All grasps at the top-face center of a 40 mm cube, approaching along -z.
  SingleObjectGraspSet set;
  set.object_id = "cube40";
  set.sample_count = 1;
  MajorGrasp m;
  for (std::size_t i = 0; i < grasps.size(); ++i) {
    const ScoredGrasp g{Grasp{Vec3(0, 0, 20), -Vec3::UnitZ(), grasps[i].first, 30.0}, grasps[i].second};
    if (i == 0) m.major = g;
    else m.supplementary.push_back(g);
  }
  set.majors.push_back(m);
  return set;
}

SceneSpec cube_and_wall(bool wall) {
  SceneSpec s;
  s.objects.push_back({0, "cube40", RigidTransform::translation_only(Vec3(0, 0, 20))});
  if (wall) s.objects.push_back({1, "wall", RigidTransform::translation_only(Vec3(43, 0, 50))});
  return s;
}

std::vector<TriMesh> oracle_meshes(const SceneSpec& scene, std::span<const ObjectSpec> models) {
  std::vector<TriMesh> out{ground_mesh()};
  for (const PlacedObject& p : scene.objects) out.push_back(models[p.model].mesh.transformed(p.pose));
  return out;
}

Camera look_at(const Vec3& eye, const Vec3& target, CameraIntrinsics K = {}) {
  Camera c;
  c.intrinsics = K;
  const Vec3 z = (target - eye).normalized();
  const Vec3 x = z.cross(Vec3::UnitZ()).normalized();
  c.pose.rotation.col(0) = x;
  c.pose.rotation.col(1) = z.cross(x);
  c.pose.rotation.col(2) = z;
  c.pose.translation = eye;
  return c;
}

std::string slurp(const std::filesystem::path& p) { return read_binary_file(p); }

}  // namespace

TEST(StablePoses, CubeHasSixAndShearedBoxLosesItsBase) {
  const ObjectSpec cube = ObjectSpec::make("c", make_cube(40));
  EXPECT_EQ(stable_poses(cube.mesh, cube.centroid).size(), 6u);

  const ObjectSpec shear = ObjectSpec::make("s", sheared_box());
  const auto poses = stable_poses(shear.mesh, shear.centroid);
  EXPECT_LT(poses.size(), 6u);
  EXPECT_GE(poses.size(), 1u);
  for (const StablePose& sp : poses) {
    EXPECT_LT((sp.rotation * sp.down + Vec3::UnitZ()).norm(), 1e-12);
    // Oracle: rotate, collect the lowest vertices, test the centroid projection.
    double zmin = std::numeric_limits<double>::infinity();
    for (const Vec3& p : shear.mesh.vertices()) zmin = std::min(zmin, (sp.rotation * p).z());
    std::vector<Eigen::Vector2d> support;
    for (const Vec3& p : shear.mesh.vertices()) {
      const Vec3 q = sp.rotation * p;
      if (q.z() - zmin < 1e-9) support.emplace_back(q.x(), q.y());
    }
    const Vec3 c = sp.rotation * shear.centroid;
    EXPECT_TRUE(strictly_inside_2d(support, Eigen::Vector2d(c.x(), c.y()), 1e-6));
  }
  // The z = 0 base of the shear leaves the centroid 20 mm outside its square.
  for (const StablePose& sp : poses) EXPECT_GT((sp.down + Vec3::UnitZ()).norm(), 1e-6);
}

TEST(ComposeScene, SingleCubeRestsOnAFace) {
  const std::vector<ObjectSpec> models{ObjectSpec::make("cube40", make_cube(40))};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SceneSpec s = compose_scene(models, 1, seed);
    ASSERT_EQ(s.objects.size(), 1u);
    EXPECT_EQ(s.placement_failures, 0);
    const TriMesh placed = models[0].mesh.transformed(s.objects[0].pose);
    int on_ground = 0;
    double zmin = std::numeric_limits<double>::infinity();
    for (const Vec3& p : placed.vertices()) {
      zmin = std::min(zmin, p.z());
      if (std::abs(p.z()) < 1e-9) ++on_ground;
    }
    EXPECT_NEAR(zmin, 0.0, 1e-9);
    EXPECT_EQ(on_ground, 4);
    const Aabb b = placed.bounds();
    EXPECT_GE(b.lo.x(), -100 - 1e-9);
    EXPECT_LE(b.hi.x(), 100 + 1e-9);
    EXPECT_GE(b.lo.y(), -100 - 1e-9);
    EXPECT_LE(b.hi.y(), 100 + 1e-9);
  }
}

TEST(ComposeScene, PenetrationBoundedAndDeterministic) {
  const auto models = mixed_models();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const SceneSpec s = compose_scene(models, 8, seed);
    const SceneSpec again = compose_scene(models, 8, seed);
    ASSERT_EQ(s.objects.size(), again.objects.size());
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      EXPECT_EQ(s.objects[i].model, again.objects[i].model);
      EXPECT_EQ(s.objects[i].pose.rotation, again.objects[i].pose.rotation);
      EXPECT_EQ(s.objects[i].pose.translation, again.objects[i].pose.translation);
    }
    EXPECT_EQ(static_cast<int>(s.objects.size()) + s.placement_failures, 8);

    std::vector<TriMesh> placed;
    for (const PlacedObject& p : s.objects) placed.push_back(models[p.model].mesh.transformed(p.pose));
    double worst = 0.0;
    for (std::size_t i = 0; i < placed.size(); ++i) {
      const Aabb bi = placed[i].bounds();
      EXPECT_GE(bi.lo.z(), -1e-9);
      EXPECT_GE(bi.lo.x(), -100 - 1e-9);
      EXPECT_LE(bi.hi.y(), 100 + 1e-9);
      std::vector<Vec3> probes = sample_surface(placed[i], 1500, seed * 31 + i).cloud.points;
      probes.insert(probes.end(), placed[i].vertices().begin(), placed[i].vertices().end());
      for (std::size_t j = 0; j < placed.size(); ++j) {
        if (i == j || !bi.overlaps(placed[j].bounds())) continue;
        for (const Vec3& p : probes)
          if (inside_mesh(placed[j], p)) worst = std::max(worst, distance_to_surface(placed[j], p));
      }
    }
    EXPECT_LE(worst, 0.5) << "seed " << seed;
  }
}

TEST(ComposeScene, RejectsBadInput) {
  const auto models = mixed_models();
  EXPECT_THROW(compose_scene(models, 0, 1), Error);
  EXPECT_THROW(compose_scene(std::span<const ObjectSpec>{}, 1, 1), Error);
  // A slab wider than the totebox can never be placed.
  const std::vector<ObjectSpec> wide{ObjectSpec::make("slab", make_box(400, 400, 300))};
  const SceneSpec s = compose_scene(wide, 2, 1);
  EXPECT_TRUE(s.objects.empty());
  EXPECT_EQ(s.placement_failures, 2);
}

TEST(SceneGraspFilter, WallForcesSupplementaryAndBlocksAll) {
  const std::vector<ObjectSpec> models{ObjectSpec::make("cube40", make_cube(40)),
                                       ObjectSpec::make("wall", make_box(10, 200, 100))};
  const GripperModel gripper;
  const SingleObjectGraspSet set = hand_set(
      {{Vec3::UnitX(), 0.5}, {Vec3::UnitX(), 0.4}, {Vec3::UnitY(), 0.3}, {-Vec3::UnitY(), 0.2}});
  const std::vector<SingleObjectGraspSet> sets{set, SingleObjectGraspSet{"wall"}};

  {
    const SceneSpec open = cube_and_wall(false);
    const FilteredGrasps f = scene_grasp_filter(open, SceneGeometry(open, models), sets, gripper);
    ASSERT_EQ(f.positives.size(), 1u);
    EXPECT_FALSE(f.positives[0].fallback);
    EXPECT_EQ(f.positives[0].grasp.q_c, 0.5);
    EXPECT_LT((f.positives[0].grasp.grasp.point - Vec3(0, 0, 40)).norm(), 1e-12);
  }

  const SceneSpec walled = cube_and_wall(true);
  const auto meshes = oracle_meshes(walled, models);
  const FilteredGrasps f = scene_grasp_filter(walled, SceneGeometry(walled, models), sets, gripper);
  ASSERT_EQ(f.positives.size(), 1u);
  EXPECT_TRUE(f.positives[0].fallback);
  // Oracle: the best collision-free supplementary by the clipping test.
  double best = 0;
  const Grasp major = set.majors[0].major.grasp.transformed(walled.objects[0].pose);
  EXPECT_TRUE(collide_oracle(gripper, major, meshes));
  for (const ScoredGrasp& s : set.majors[0].supplementary)
    if (!collide_oracle(gripper, s.grasp.transformed(walled.objects[0].pose), meshes)) best = std::max(best, s.q_c);
  EXPECT_EQ(f.positives[0].grasp.q_c, best);
  EXPECT_EQ(best, 0.3);
  EXPECT_LE(f.positives[0].grasp.q_c, set.majors[0].major.q_c);
  EXPECT_FALSE(collide_oracle(gripper, f.positives[0].grasp.grasp, meshes));

  const SingleObjectGraspSet blocked = hand_set({{Vec3::UnitX(), 0.5}, {-Vec3::UnitX(), 0.4}});
  const std::vector<SingleObjectGraspSet> sets2{blocked, SingleObjectGraspSet{"wall"}};
  const FilteredGrasps g = scene_grasp_filter(walled, SceneGeometry(walled, models), sets2, gripper);
  EXPECT_TRUE(g.positives.empty());
  ASSERT_EQ(g.negatives.size(), 1u);
  EXPECT_EQ(g.blocked, 1);
  EXPECT_LT((g.negatives[0].point - Vec3(0, 0, 40)).norm(), 1e-12);
  EXPECT_LT((g.negatives[0].normal + Vec3::UnitZ()).norm(), 1e-12);
}

TEST(SceneGraspFilter, PositivesAreCollisionFreeInComposedScenes) {
  const auto models = mixed_models();
  PlannerConfig cfg;
  cfg.samples = 30;
  cfg.rotations = 8;
  const GripperModel gripper;
  std::vector<SingleObjectGraspSet> sets;
  for (std::size_t i = 0; i < models.size(); ++i) sets.push_back(plan_object(models[i], gripper, cfg, 11 + i));
  for (std::uint64_t seed : {5u, 6u}) {
    const SceneSpec s = compose_scene(models, 5, seed);
    const FilteredGrasps f = scene_grasp_filter(s, SceneGeometry(s, models), sets, gripper);
    const auto meshes = oracle_meshes(s, models);
    std::size_t majors = 0, negatives = 0;
    for (const PlacedObject& p : s.objects) {
      majors += sets[p.model].majors.size();
      negatives += sets[p.model].negatives.size();
    }
    EXPECT_EQ(f.positives.size() + f.blocked, majors);
    EXPECT_EQ(f.negatives.size(), negatives + f.blocked);
    for (const ScenePositive& p : f.positives) {
      EXPECT_FALSE(collide_oracle(gripper, p.grasp.grasp, meshes));
      EXPECT_GT(p.grasp.q_c, 0.0);
    }
  }
}

TEST(RandomizeCamera, AimsAtCenterAndCoversBands) {
  const Vec3 target(3, -4, 0);
  const CameraBands bands;
  std::vector<double> u;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const CameraSample c = randomize_camera(target, seed, bands);
    const Vec3 to_target = (target - c.camera.position()).normalized();
    EXPECT_LT(c.camera.optical_axis().cross(to_target).norm(), 1e-6);
    EXPECT_GT(c.camera.optical_axis().dot(to_target), 0.0);
    EXPECT_TRUE(c.camera.pose.is_valid(1e-12));
    const double dist = (c.camera.position() - target).norm();
    EXPECT_GE(dist, bands.radius_min - 1e-9);
    EXPECT_LE(dist, bands.radius_max + 1e-9);
    const double elev = std::asin((c.camera.position() - target).z() / dist) * 180 / std::numbers::pi;
    EXPECT_GE(elev, bands.elevation_min - 1e-9);
    EXPECT_LE(elev, bands.elevation_max + 1e-9);
    u.push_back((elev - bands.elevation_min) / (bands.elevation_max - bands.elevation_min));
  }
  // Kolmogorov-Smirnov against U(0, 1); 1% critical value for n = 1000.
  std::sort(u.begin(), u.end());
  double d = 0;
  const double n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) d = std::max({d, (i + 1) / n - u[i], u[i] - i / n});
  EXPECT_LT(d, 1.628 / std::sqrt(n));

  const CameraSample a = randomize_camera(target, 42), b = randomize_camera(target, 42);
  EXPECT_EQ(a.camera.pose.rotation, b.camera.pose.rotation);
  EXPECT_EQ(a.camera.pose.translation, b.camera.pose.translation);
}

TEST(Capture, GroundOnlySceneIsFlatAndCropped) {
  const std::vector<ObjectSpec> models{ObjectSpec::make("cube40", make_cube(40))};
  const SceneSpec empty;
  const SceneGeometry geo(empty, models);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CameraSample cam = randomize_camera(Vec3::Zero(), seed);
    const Capture y = capture(geo, cam.camera);
    EXPECT_GT(y.cloud.size(), 0u);
    EXPECT_LE(y.cloud.size(), static_cast<std::size_t>(640 * 480));
    for (std::size_t i = 0; i < y.cloud.size(); ++i) {
      EXPECT_LT(std::abs(y.cloud.points[i].z()), 1e-3);
      EXPECT_TRUE(y.is_ground(i));
      EXPECT_LE(std::abs(y.cloud.points[i].x()), 100.0);
      EXPECT_LE(std::abs(y.cloud.points[i].y()), 100.0);
    }
  }
}

TEST(Capture, WindowedRenderMatchesFullRender) {
  const auto models = mixed_models();
  const SceneSpec s = compose_scene(models, 6, 9);
  const SceneGeometry geo(s, models);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Camera cam = randomize_camera(Vec3::Zero(), seed).camera;
    const Capture y = capture(geo, cam);
    // Full-image reference with the same crop.
    const BackprojectedCloud full = backproject(render_depth(geo.all(), cam), cam);
    std::vector<Vec3> ref;
    for (const Vec3& p : full.cloud.points)
      if (std::abs(p.x()) <= 100 && std::abs(p.y()) <= 100) ref.push_back(p);
    ASSERT_EQ(ref.size(), y.cloud.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_EQ(ref[i], y.cloud.points[i]);
  }
}

TEST(Capture, OccludedObjectContributesNothing) {
  const std::vector<ObjectSpec> models{ObjectSpec::make("small", make_cube(10)),
                                       ObjectSpec::make("big", make_box(40, 150, 120))};
  SceneSpec s;
  s.objects.push_back({0, "small", RigidTransform::translation_only(Vec3(60, 0, 5))});
  s.objects.push_back({1, "big", RigidTransform::translation_only(Vec3(0, 0, 60))});
  const SceneGeometry geo(s, models);
  const Camera cam = look_at(Vec3(-600, 0, 20), Vec3(0, 0, 20));
  // Visibility oracle: every surface point of the small cube is hidden from the eye.
  const SurfaceSample pts = sample_surface(geo.objects[0]->mesh(), 500, 3);
  for (const Vec3& p : pts.cloud.points) {
    const Vec3 d = p - cam.position();
    const RayHit h = geo.objects[1]->raycast(cam.position(), d.normalized(), 0.0, d.norm());
    EXPECT_TRUE(h.valid());
  }
  const Capture y = capture(geo, cam);
  EXPECT_GT(y.cloud.size(), 0u);
  EXPECT_EQ(std::count(y.source.begin(), y.source.end(), 1), 0);
  EXPECT_GT(std::count(y.source.begin(), y.source.end(), 2), 0);

  // Looking away from the scene leaves nothing in the crop.
  const Camera away = look_at(Vec3(0, 0, 500), Vec3(0, 0, 1000));
  try {
    capture(geo, away);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCapture);
  }
}

TEST(AssignLabels, MasksAndLabelsFollowThePointType) {
  const auto models = mixed_models();
  PlannerConfig cfg;
  cfg.samples = 60;
  cfg.rotations = 8;
  const GripperModel gripper;
  std::vector<SingleObjectGraspSet> sets;
  for (std::size_t i = 0; i < models.size(); ++i) sets.push_back(plan_object(models[i], gripper, cfg, 3 + i));
  const SceneSpec s = compose_scene(models, 4, 12);
  const SceneGeometry geo(s, models);
  const FilteredGrasps f = scene_grasp_filter(s, geo, sets, gripper);
  int appended_pos = 0, appended_neg = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Capture y = capture(geo, randomize_camera(Vec3::Zero(), seed).camera);
    LabelStats st;
    const TrainingSample t = assign_labels(y, f, 1.0, &st);
    ASSERT_TRUE(t.consistent());
    EXPECT_EQ(t.size(), y.cloud.size() + st.positives + st.negatives);
    EXPECT_EQ(st.positives + st.negatives + st.dropped, static_cast<int>(f.positives.size() + f.negatives.size()));
    for (std::size_t i = 0; i < y.cloud.size(); ++i) {
      EXPECT_EQ(t.masks[i], y.is_ground(i) ? kMaskGround : kMaskObject);
      EXPECT_EQ(t.labels[i], PointLabel{});
    }
    // Linear-scan oracle for which planned points survive.
    auto has_neighbor = [&](const Vec3& q) {
      for (const Vec3& p : y.cloud.points)
        if ((p - q).norm() <= 1.0) return true;
      return false;
    };
    std::size_t k = y.cloud.size();
    for (const ScenePositive& p : f.positives) {
      if (!has_neighbor(p.grasp.grasp.point)) continue;
      ASSERT_LT(k, t.size());
      EXPECT_EQ(t.masks[k], kMaskPositive);
      const PointLabel& l = t.labels[k];
      const Vec3 n(l[0], l[1], l[2]), r(l[3], l[4], l[5]);
      EXPECT_NEAR(n.norm(), 1.0, 1e-6);
      EXPECT_NEAR(r.norm(), 1.0, 1e-6);
      EXPECT_LT(std::abs(n.dot(r)), 1e-6);
      EXPECT_EQ(l[6], 1.0);
      EXPECT_EQ(l[7], p.grasp.q_c);
      EXPECT_GT(l[7], 0.0);
      ++k;
      ++appended_pos;
    }
    for (const SceneNegative& n : f.negatives) {
      if (!has_neighbor(n.point)) continue;
      ASSERT_LT(k, t.size());
      EXPECT_EQ(t.masks[k], kMaskNegative);
      const PointLabel& l = t.labels[k];
      EXPECT_EQ(l[3], 0.0);
      EXPECT_EQ(l[4], 0.0);
      EXPECT_EQ(l[5], 0.0);
      EXPECT_EQ(l[6], 0.0);
      EXPECT_EQ(l[7], 0.0);
      EXPECT_NEAR(Vec3(l[0], l[1], l[2]).norm(), 1.0, 1e-9);
      ++k;
      ++appended_neg;
    }
    EXPECT_EQ(k, t.size());
  }
  EXPECT_GT(appended_pos, 0);
  EXPECT_GT(appended_neg, 0);
}

TEST(SampleIo, RoundTripAndCorruption) {
  TrainingSample s;
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    s.points.push_back(random_point(rng, 100));
    PointLabel l{};
    const Vec3 n = random_unit(rng);
    l = {n.x(), n.y(), n.z(), 0, 0, 0, 0, 0};
    s.labels.push_back(l);
    s.masks.push_back(i % 2 ? kMaskNegative : kMaskGround);
  }
  const std::string bytes = encode_sample(s);
  EXPECT_EQ(bytes.substr(0, 4), "PNGD");
  EXPECT_EQ(bytes.size(), 12u + 50 * 48);
  const TrainingSample back = decode_sample(bytes);
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (int k = 0; k < 3; ++k) EXPECT_EQ(back.points[i][k], static_cast<double>(static_cast<float>(s.points[i][k])));
    EXPECT_EQ(back.masks[i], s.masks[i]);
  }
  EXPECT_EQ(encode_sample(back), bytes);

  EXPECT_THROW(decode_sample(bytes.substr(0, bytes.size() - 1)), Error);
  std::string bad = bytes;
  bad[bad.size() - 1] = 7;  // not an emitted mask pattern
  EXPECT_THROW(decode_sample(bad), Error);
  bad = bytes;
  bad[4] = 9;
  try {
    decode_sample(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Format);
  }
}

TEST(ModelLibrary, ParsesPrimitivesAndRejectsDuplicates) {
  const auto lib = parse_model_library("# toy\ncube40 cube 40\n\ncan cylinder 20 60 16  # comment\n");
  ASSERT_EQ(lib.size(), 2u);
  EXPECT_EQ(lib[1].id, "can");
  EXPECT_EQ(lib[1].source, "cylinder 20 60 16");
  EXPECT_EQ(load_model(lib[0]).mesh.size(), 12u);
  EXPECT_THROW(parse_model_library("a cube 4\na cube 5\n"), Error);
  EXPECT_THROW(parse_model_library("# nothing\n"), Error);
  EXPECT_THROW(load_model(ModelEntry{"x", "pyramid 3"}), Error);
}

TEST(GenerateDataset, ToyRunIsCompleteAndWorkerIndependent) {
  const std::vector<ModelEntry> entries{{"cube40", "cube 40"}, {"box", "box 30 50 70"}, {"cyl", "cylinder 18 60 16"}};
  std::vector<ObjectSpec> models;
  for (const ModelEntry& e : entries) models.push_back(load_model(e));
  PlannerConfig pcfg;
  pcfg.samples = 40;
  pcfg.rotations = 8;
  const GripperModel gripper;
  std::vector<SingleObjectGraspSet> sets;
  for (std::size_t i = 0; i < models.size(); ++i) sets.push_back(plan_object(models[i], gripper, pcfg, 100 + i));

  DatasetConfig cfg = DatasetConfig::toy();
  cfg.seed = 7;
  cfg.max_objects = 4;
  const auto root = std::filesystem::temp_directory_path() / "pngrasp_test_dataset";
  std::filesystem::remove_all(root);
  const DatasetManifest serial = generate_dataset(entries, models, sets, gripper, cfg, root / "serial", 1);
  const DatasetManifest parallel = generate_dataset(entries, models, sets, gripper, cfg, root / "parallel", 8);

  EXPECT_EQ(serial.samples.size(), 50u);
  EXPECT_TRUE(serial.failures.empty());
  EXPECT_EQ(slurp(root / "serial" / kManifestName), slurp(root / "parallel" / kManifestName));
  int positives = 0;
  for (const SampleRecord& r : serial.samples) {
    const std::string a = slurp(root / "serial" / r.path);
    EXPECT_EQ(a, slurp(root / "parallel" / r.path)) << r.path;
    const TrainingSample t = decode_sample(a);
    EXPECT_EQ(static_cast<int>(t.size()), r.points);
    EXPECT_EQ(encode_sample(t), a);
    for (const PointMask& m : t.masks) EXPECT_TRUE(is_emitted_mask(m));
    positives += r.positives;
  }
  EXPECT_GT(positives, 0);

  const DatasetManifest loaded = load_manifest(root / "serial" / kManifestName);
  EXPECT_EQ(to_json(loaded).dump(), to_json(serial).dump());
  EXPECT_EQ(loaded.scenes.size(), 10u);
  std::filesystem::remove_all(root);
}

TEST(DatasetConfig, StrictJsonRejectsUnknownKeys) {
  DatasetConfig c;
  read_json(Json::parse(R"({"sims": 3, "camera": {"radius_min": 450}})"), c);
  EXPECT_EQ(c.sims, 3);
  EXPECT_EQ(c.bands.radius_min, 450);
  EXPECT_EQ(c.cams, 5);
  EXPECT_THROW(read_json(Json::parse(R"({"simz": 3})"), c), Error);
  EXPECT_THROW(read_json(Json::parse(R"({"camera": {"roll": 1}})"), c), Error);
  EXPECT_THROW(read_json(Json::parse(R"({"sims": "many"})"), c), Error);
}
