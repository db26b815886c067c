#pragma once

#include "pngrasp/geometry/mesh_io.hpp"
#include "pngrasp/geometry/primitives.hpp"
#include "pngrasp/json_io.hpp"
#include "pngrasp/scenegen/labels.hpp"

#include <cstdio>

namespace pngrasp {

/// One entry of a model library. `source` is either a primitive description
/// ("cube 40") or "mesh <path> [unit_to_mm]" with the path relative to the
/// library file.
struct ModelEntry {
  std::string id;
  std::string source;
  double mu = 0.2;
};

inline ObjectSpec load_model(const ModelEntry& e, const std::filesystem::path& base_dir = {}) {
  std::istringstream in(e.source);
  std::string kind;
  in >> kind;
  if (kind == "mesh") {
    std::string path;
    double unit = 1.0;
    in >> path;
    if (!(in >> unit)) unit = 1.0;
    require(!path.empty(), ErrorCode::Format, "model " + e.id + ": missing mesh path");
    const std::filesystem::path p = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : base_dir / path;
    return ObjectSpec::make(e.id, load_mesh(p, unit), e.mu);
  }
  return ObjectSpec::make(e.id, parse_primitive(e.source), e.mu);
}

/// Library text: one model per line, "<id> <source...>"; '#' starts a comment.
inline std::vector<ModelEntry> parse_model_library(const std::string& text, double mu = 0.2) {
  std::vector<ModelEntry> out;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    ModelEntry e;
    if (!(ls >> e.id)) continue;
    std::getline(ls >> std::ws, e.source);
    while (!e.source.empty() && std::isspace(static_cast<unsigned char>(e.source.back()))) e.source.pop_back();
    require(!e.source.empty(), ErrorCode::Format, "model " + e.id + " has no source");
    require(ids.insert(e.id).second, ErrorCode::Format, "duplicate model id " + e.id);
    e.mu = mu;
    out.push_back(std::move(e));
  }
  require(!out.empty(), ErrorCode::EmptyInput, "model library is empty");
  return out;
}

struct DatasetConfig {
  int sims = 4000;       // N_sim
  int cams = 5;          // N_cam
  double radius = 1.0;   // R, mm
  int min_objects = 1;   // m drawn uniformly from [min_objects, max_objects]
  int max_objects = 8;
  std::uint64_t seed = 0;
  double crop_half = 100.0;  // mm
  CameraBands bands;
  CameraIntrinsics intrinsics;
  ComposerConfig composer;

  static DatasetConfig toy() {
    DatasetConfig c;
    c.sims = 10;
    return c;
  }

  bool is_valid() const {
    return sims >= 1 && cams >= 1 && radius > 0 && min_objects >= 1 && max_objects >= min_objects &&
           crop_half > 0 && bands.is_valid() && intrinsics.is_valid() && composer.is_valid();
  }
};

struct SampleRecord {
  std::string path;  // relative to the dataset directory
  int sim = 0;
  int cam = 0;
  std::uint64_t seed = 0;
  Camera camera;
  int points = 0;
  int positives = 0;
  int negatives = 0;
};

struct SceneRecord {
  int sim = 0;
  std::uint64_t seed = 0;
  SceneSpec scene;
};

struct FailureRecord {
  int sim = 0;
  int cam = -1;  // -1 for scene-level failures
  std::string code;
  std::string message;
};

struct DatasetManifest {
  int version = 1;
  DatasetConfig config;
  std::vector<ModelEntry> models;
  std::vector<SceneRecord> scenes;
  std::vector<SampleRecord> samples;
  std::vector<FailureRecord> failures;
};

inline std::string sample_file_name(int sim, int cam) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "samples/sim%05d_cam%d.pngd", sim, cam);
  return buf;
}

/// Everything derived for one camera of one simulation.
struct GeneratedSample {
  SampleRecord record;
  TrainingSample sample;
};

struct GeneratedScene {
  SceneRecord record;
  FilteredGrasps grasps;
  std::vector<GeneratedSample> samples;
  std::vector<FailureRecord> failures;
};

/// Composes, filters and captures one simulation. Pure in (config, sim).
inline GeneratedScene generate_scene(std::span<const ObjectSpec> models,
                                     std::span<const SingleObjectGraspSet> grasp_sets,
                                     const GripperModel& gripper, const DatasetConfig& cfg, int sim) {
  GeneratedScene out;
  const std::uint64_t sim_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(sim), 0);
  std::mt19937_64 rng(sim_seed);
  const int m = std::uniform_int_distribution<int>(cfg.min_objects, cfg.max_objects)(rng);
  out.record.sim = sim;
  out.record.seed = sim_seed;
  out.record.scene = compose_scene(models, m, rng(), cfg.composer);
  const SceneSpec& scene = out.record.scene;
  if (scene.placement_failures > 0)
    out.failures.push_back({sim, -1, to_string(ErrorCode::PlacementFailure),
                            std::to_string(scene.placement_failures) + " of " + std::to_string(m) +
                                " objects could not be placed"});
  const SceneGeometry geometry(scene, models);
  out.grasps = scene_grasp_filter(scene, geometry, grasp_sets, gripper);
  for (int c = 0; c < cfg.cams; ++c) {
    const std::uint64_t cam_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(sim), static_cast<std::uint64_t>(c) + 1);
    const CameraSample cam = randomize_camera(scene.center, cam_seed, cfg.bands, cfg.intrinsics);
    try {
      const Capture y = capture(geometry, cam.camera, cfg.crop_half);
      LabelStats st;
      GeneratedSample g;
      g.sample = assign_labels(y, out.grasps, cfg.radius, &st);
      g.record = SampleRecord{sample_file_name(sim, c), sim, c, cam_seed, cam.camera,
                              static_cast<int>(g.sample.size()), st.positives, st.negatives};
      out.samples.push_back(std::move(g));
    } catch (const Error& e) {
      out.failures.push_back({sim, c, to_string(e.code()), e.what()});
    }
  }
  return out;
}

inline Json to_json(const DatasetConfig& c) {
  return Json{{"sims", c.sims},
              {"cams", c.cams},
              {"radius", c.radius},
              {"min_objects", c.min_objects},
              {"max_objects", c.max_objects},
              {"seed", c.seed},
              {"crop_half", c.crop_half},
              {"camera", {{"radius_min", c.bands.radius_min},
                          {"radius_max", c.bands.radius_max},
                          {"elevation_min", c.bands.elevation_min},
                          {"elevation_max", c.bands.elevation_max}}},
              {"intrinsics", {{"fx", c.intrinsics.fx},
                              {"fy", c.intrinsics.fy},
                              {"cx", c.intrinsics.cx},
                              {"cy", c.intrinsics.cy},
                              {"width", c.intrinsics.width},
                              {"height", c.intrinsics.height}}},
              {"composer", {{"totebox_half", c.composer.totebox_half},
                            {"max_height", c.composer.max_height},
                            {"max_attempts", c.composer.max_attempts},
                            {"edge_spacing", c.composer.edge_spacing}}}};
}

/// Strict: unknown keys are rejected; absent keys keep the value in `c`.
inline void read_json(const Json& j, DatasetConfig& c, const std::string& where = "dataset") {
  StrictObject o(j, where);
  o.get("sims", c.sims);
  o.get("cams", c.cams);
  o.get("radius", c.radius);
  o.get("min_objects", c.min_objects);
  o.get("max_objects", c.max_objects);
  o.get("seed", c.seed);
  o.get("crop_half", c.crop_half);
  if (const Json* b = o.child("camera")) {
    StrictObject ob(*b, where + ".camera");
    ob.get("radius_min", c.bands.radius_min);
    ob.get("radius_max", c.bands.radius_max);
    ob.get("elevation_min", c.bands.elevation_min);
    ob.get("elevation_max", c.bands.elevation_max);
    ob.finish();
  }
  if (const Json* k = o.child("intrinsics")) {
    StrictObject ok(*k, where + ".intrinsics");
    ok.get("fx", c.intrinsics.fx);
    ok.get("fy", c.intrinsics.fy);
    ok.get("cx", c.intrinsics.cx);
    ok.get("cy", c.intrinsics.cy);
    ok.get("width", c.intrinsics.width);
    ok.get("height", c.intrinsics.height);
    ok.finish();
  }
  if (const Json* k = o.child("composer")) {
    StrictObject oc(*k, where + ".composer");
    oc.get("totebox_half", c.composer.totebox_half);
    oc.get("max_height", c.composer.max_height);
    oc.get("max_attempts", c.composer.max_attempts);
    oc.get("edge_spacing", c.composer.edge_spacing);
    oc.finish();
  }
  o.finish();
}

inline Json to_json(const DatasetManifest& m) {
  Json j;
  j["format"] = "pngrasp-dataset";
  j["version"] = m.version;
  j["config"] = to_json(m.config);
  Json models = Json::array();
  for (const ModelEntry& e : m.models) models.push_back({{"id", e.id}, {"source", e.source}, {"mu", e.mu}});
  j["models"] = models;
  Json scenes = Json::array();
  for (const SceneRecord& s : m.scenes) {
    Json objs = Json::array();
    for (const PlacedObject& p : s.scene.objects)
      objs.push_back({{"model", p.model}, {"id", p.id}, {"pose", to_json(p.pose)}});
    scenes.push_back({{"sim", s.sim},
                      {"seed", s.seed},
                      {"requested", s.scene.requested},
                      {"placement_failures", s.scene.placement_failures},
                      {"totebox_half", s.scene.totebox_half},
                      {"center", to_json(s.scene.center)},
                      {"objects", objs}});
  }
  j["scenes"] = scenes;
  Json samples = Json::array();
  for (const SampleRecord& r : m.samples)
    samples.push_back({{"path", r.path},
                       {"sim", r.sim},
                       {"cam", r.cam},
                       {"seed", r.seed},
                       {"camera_pose", to_json(r.camera.pose)},
                       {"points", r.points},
                       {"positives", r.positives},
                       {"negatives", r.negatives}});
  j["samples"] = samples;
  Json failures = Json::array();
  for (const FailureRecord& f : m.failures)
    failures.push_back({{"sim", f.sim}, {"cam", f.cam}, {"code", f.code}, {"message", f.message}});
  j["failures"] = failures;
  return j;
}

inline DatasetManifest manifest_from_json(const Json& j) {
  try {
    if (j.at("format") != "pngrasp-dataset") fail(ErrorCode::Format, "not a dataset manifest");
    DatasetManifest m;
    m.version = j.at("version").get<int>();
    if (m.version != 1) fail(ErrorCode::Format, "unsupported manifest version");
    read_json(j.at("config"), m.config, "config");
    for (const Json& e : j.at("models"))
      m.models.push_back({e.at("id").get<std::string>(), e.at("source").get<std::string>(), e.at("mu").get<double>()});
    for (const Json& s : j.at("scenes")) {
      SceneRecord r;
      r.sim = s.at("sim").get<int>();
      r.seed = s.at("seed").get<std::uint64_t>();
      r.scene.requested = s.at("requested").get<int>();
      r.scene.placement_failures = s.at("placement_failures").get<int>();
      r.scene.totebox_half = s.at("totebox_half").get<double>();
      r.scene.center = vec3_from_json(s.at("center"));
      for (const Json& o : s.at("objects"))
        r.scene.objects.push_back({o.at("model").get<int>(), o.at("id").get<std::string>(),
                                   transform_from_json(o.at("pose"))});
      m.scenes.push_back(std::move(r));
    }
    for (const Json& s : j.at("samples")) {
      SampleRecord r;
      r.path = s.at("path").get<std::string>();
      r.sim = s.at("sim").get<int>();
      r.cam = s.at("cam").get<int>();
      r.seed = s.at("seed").get<std::uint64_t>();
      r.camera.pose = transform_from_json(s.at("camera_pose"));
      r.camera.intrinsics = m.config.intrinsics;
      r.points = s.at("points").get<int>();
      r.positives = s.at("positives").get<int>();
      r.negatives = s.at("negatives").get<int>();
      m.samples.push_back(std::move(r));
    }
    for (const Json& f : j.at("failures"))
      m.failures.push_back({f.at("sim").get<int>(), f.at("cam").get<int>(), f.at("code").get<std::string>(),
                            f.at("message").get<std::string>()});
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("malformed manifest: ") + e.what());
  }
}

inline constexpr const char* kManifestName = "manifest.json";

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(read_json_file(path));
}

/// Runs every simulation (in parallel over `jobs` workers), writes the
/// sample files under `out_dir` and the manifest last. Output is identical
/// for any worker count.
inline DatasetManifest generate_dataset(std::span<const ModelEntry> entries, std::span<const ObjectSpec> models,
                                        std::span<const SingleObjectGraspSet> grasp_sets,
                                        const GripperModel& gripper, const DatasetConfig& cfg,
                                        const std::filesystem::path& out_dir, int jobs = 1) {
  require(cfg.is_valid(), ErrorCode::InvalidArgument, "invalid dataset configuration");
  require(!models.empty(), ErrorCode::EmptyInput, "no models");
  require(entries.size() == models.size() && grasp_sets.size() == models.size(), ErrorCode::InvalidArgument,
          "models, entries and grasp sets differ in count");
  for (std::size_t i = 0; i < models.size(); ++i)
    require(grasp_sets[i].object_id == models[i].id, ErrorCode::ConfigMismatch,
            "grasp set " + grasp_sets[i].object_id + " does not belong to model " + models[i].id);

  std::vector<GeneratedScene> sims(static_cast<std::size_t>(cfg.sims));
  parallel_for(sims.size(), jobs, [&](std::size_t s) {
    GeneratedScene g = generate_scene(models, grasp_sets, gripper, cfg, static_cast<int>(s));
    for (const GeneratedSample& smp : g.samples) save_sample(out_dir / smp.record.path, smp.sample);
    g.grasps = {};
    for (GeneratedSample& smp : g.samples) smp.sample = {};
    sims[s] = std::move(g);
  });

  DatasetManifest m;
  m.config = cfg;
  m.models.assign(entries.begin(), entries.end());
  for (GeneratedScene& g : sims) {
    m.scenes.push_back(std::move(g.record));
    for (GeneratedSample& smp : g.samples) m.samples.push_back(std::move(smp.record));
    for (FailureRecord& f : g.failures) m.failures.push_back(std::move(f));
  }
  write_json_file(out_dir / kManifestName, to_json(m));
  return m;
}

}  // namespace pngrasp
