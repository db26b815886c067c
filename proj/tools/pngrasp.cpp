#include "pngrasp/cli/config.hpp"
#include "pngrasp/learner.hpp"
#include "pngrasp/planner.hpp"
#include "pngrasp/planner/grasp_set_io.hpp"
#include "pngrasp/scenegen.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace pngrasp;

namespace {

// Raised for anything wrong with the invocation itself; exits with 2.
struct UsageError : std::runtime_error {
  ErrorCode code;
  UsageError(ErrorCode c, const std::string& what) : std::runtime_error(what), code(c) {}
};

struct CommonOptions {
  std::uint64_t seed = 0;
  std::string config;
  int jobs = 1;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* app, CommonOptions& o) {
  o.seed_opt = app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  app->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

ToolConfig load_config(const CommonOptions& o) {
  try {
    ToolConfig c = o.config.empty() ? ToolConfig{} : read_tool_config(read_json_file(o.config));
    return c;
  } catch (const Error& e) {
    throw UsageError(e.code(), e.what());
  }
}

void validate(const ToolConfig& c) {
  try {
    c.validate();
  } catch (const Error& e) {
    throw UsageError(e.code(), e.what());
  }
}

std::string grasp_set_file(const std::string& id) { return id + ".pngs"; }

bool is_mesh_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".stl" || ext == ".obj";
}

struct Library {
  std::vector<ModelEntry> entries;
  fs::path base;
};

Library read_library(const fs::path& path, double mu) {
  Library lib;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file() && is_mesh_file(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) fail(ErrorCode::EmptyInput, "no .stl or .obj meshes in " + path.string());
    for (const fs::path& f : files) lib.entries.push_back({f.stem().string(), "mesh " + f.filename().string(), mu});
    lib.base = path;
  } else {
    lib.entries = parse_model_library(read_binary_file(path), mu);
    lib.base = path.parent_path();
  }
  return lib;
}

std::vector<ObjectSpec> load_models(const Library& lib) {
  std::vector<ObjectSpec> out;
  for (const ModelEntry& e : lib.entries) out.push_back(load_model(e, lib.base));
  return out;
}

std::vector<TrainingSample> load_samples(const fs::path& dir, const DatasetManifest& m, std::span<const int> which) {
  std::vector<TrainingSample> out;
  for (int i : which) out.push_back(load_sample(dir / m.samples[i].path));
  return out;
}

int usable_samples(const DatasetManifest& m, const TrainConfig& tc) {
  const int n = static_cast<int>(m.samples.size());
  return tc.max_samples > 0 ? std::min(n, tc.max_samples) : n;
}

std::vector<Vec3> read_cloud(const fs::path& path) {
  if (path.extension() == ".pngd") return load_sample(path).points;
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::vector<Vec3> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Vec3 p;
    if (!(ls >> p.x() >> p.y() >> p.z())) fail(ErrorCode::Format, path.string() + ": bad point row '" + line + "'");
    out.push_back(p);
  }
  return out;
}

void write_grasps(std::ostream& out, std::span<const PredictedGrasp> grasps) {
  out << "# px py pz nx ny nz rx ry rz d score category\n" << std::setprecision(9);
  for (const PredictedGrasp& g : grasps) {
    const Grasp& q = g.grasp;
    out << q.point.x() << ' ' << q.point.y() << ' ' << q.point.z() << ' ' << q.approach.x() << ' ' << q.approach.y()
        << ' ' << q.approach.z() << ' ' << q.opening.x() << ' ' << q.opening.y() << ' ' << q.opening.z() << ' '
        << q.depth << ' ' << g.score << ' ' << g.category << '\n';
  }
}

int run_plan(const std::string& models, const std::string& out, int samples, int rotations, const CommonOptions& o) {
  ToolConfig cfg = load_config(o);
  if (samples > 0) cfg.planner.samples = samples;
  if (rotations > 0) cfg.planner.rotations = rotations;
  validate(cfg);
  const Library lib = read_library(models, cfg.planner.mu);
  const std::vector<ObjectSpec> specs = load_models(lib);
  fs::create_directories(out);
  std::vector<SingleObjectGraspSet> sets(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i)
    sets[i] = plan_object(specs[i], cfg.gripper, cfg.planner, derive_seed(o.seed, i), o.jobs);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    save_grasp_set(fs::path(out) / grasp_set_file(specs[i].id), sets[i]);
    std::cout << specs[i].id << ": " << sets[i].majors.size() << " positive points, " << sets[i].negatives.size()
              << " negative points\n";
  }
  if (fs::is_directory(models)) {
    std::ofstream lib_out(fs::path(out) / "models.txt");
    for (const ModelEntry& e : lib.entries)
      lib_out << e.id << " mesh " << fs::absolute(fs::path(models) / e.source.substr(5)).string() << '\n';
  }
  return 0;
}

int run_gen(const std::string& models, const std::string& grasps, const std::string& out, int sims, int cams,
            const CommonOptions& o) {
  ToolConfig cfg = load_config(o);
  if (sims > 0) cfg.dataset.sims = sims;
  if (cams > 0) cfg.dataset.cams = cams;
  if (o.seed_opt->count()) cfg.dataset.seed = o.seed;
  validate(cfg);
  const Library lib = read_library(models, cfg.planner.mu);
  const std::vector<ObjectSpec> specs = load_models(lib);
  std::vector<SingleObjectGraspSet> sets;
  for (const ObjectSpec& s : specs) sets.push_back(load_grasp_set(fs::path(grasps) / grasp_set_file(s.id)));
  const DatasetManifest m = generate_dataset(lib.entries, specs, sets, cfg.gripper, cfg.dataset, out, o.jobs);
  std::cout << m.samples.size() << " samples from " << m.scenes.size() << " scenes, " << m.failures.size()
            << " failures\n";
  return 0;
}

int run_train(const std::string& data, const std::string& out, int epochs, const CommonOptions& o) {
  ToolConfig cfg = load_config(o);
  if (epochs >= 0) cfg.train.epochs = epochs;
  if (o.seed_opt->count()) cfg.train.seed = o.seed;
  validate(cfg);
  const DatasetManifest m = load_manifest(fs::path(data) / kManifestName);
  const int n = usable_samples(m, cfg.train);
  require(n > 0, ErrorCode::EmptyInput, "dataset has no samples");
  const SplitIndices split = split_samples(n, cfg.train.train_fraction, cfg.train.seed);
  const std::vector<TrainingSample> samples = load_samples(data, m, split.train);
  Checkpoint c = Checkpoint::fresh(cfg.network, cfg.preprocess, cfg.train.seed);
  std::cout << "training on " << samples.size() << " samples (" << split.held_out.size() << " held out), "
            << c.weights.parameter_count() << " parameters\n";
  train(c, samples, cfg.train, [](const EpochRecord& e) {
    std::cout << "epoch " << e.epoch << " total " << e.total << " score " << e.score << " category " << e.category
              << " normal " << e.normal << " rotation " << e.rotation << '\n' << std::flush;
  }, o.jobs);
  save_checkpoint(out, c);
  return 0;
}

int run_predict(const std::string& checkpoint, const std::string& cloud, const std::string& out, double threshold,
                const CommonOptions& o) {
  ToolConfig cfg = load_config(o);
  if (threshold >= 0) cfg.predict.threshold = threshold;
  validate(cfg);
  const Checkpoint c = load_checkpoint(checkpoint);
  const std::vector<Vec3> points = read_cloud(cloud);
  const std::vector<PredictedGrasp> grasps = predict(points, c, cfg.predict, o.seed, o.jobs);
  if (out.empty()) {
    write_grasps(std::cout, grasps);
  } else {
    std::ofstream f(out);
    if (!f) fail(ErrorCode::Io, "cannot write " + out);
    write_grasps(f, grasps);
    std::cout << grasps.size() << " grasps\n";
  }
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& data, const std::string& models,
             const std::string& out, bool all_samples, const CommonOptions& o) {
  ToolConfig cfg = load_config(o);
  validate(cfg);
  const Checkpoint c = load_checkpoint(checkpoint);
  const DatasetManifest m = load_manifest(fs::path(data) / kManifestName);
  Library lib{m.models, fs::current_path()};
  if (!models.empty()) {
    lib = read_library(models, cfg.planner.mu);
    require(lib.entries.size() == m.models.size(), ErrorCode::ConfigMismatch, "model library differs from the dataset's");
    for (std::size_t i = 0; i < lib.entries.size(); ++i) {
      require(lib.entries[i].id == m.models[i].id, ErrorCode::ConfigMismatch, "model library differs from the dataset's");
      lib.entries[i].mu = m.models[i].mu;
    }
  }
  const std::vector<ObjectSpec> specs = load_models(lib);

  const int n = usable_samples(m, cfg.train);
  std::vector<int> which;
  if (all_samples) {
    which.resize(n);
    std::iota(which.begin(), which.end(), 0);
  } else {
    // The split the checkpoint was trained with.
    which = split_samples(n, cfg.train.train_fraction, c.seed).held_out;
  }
  require(!which.empty(), ErrorCode::EmptyInput, "no samples to evaluate");

  PredictConfig pcfg = cfg.predict;
  pcfg.threshold = 0.0;  // the sweep applies the thresholds
  std::vector<EvalPrediction> predictions;
  std::vector<EvalLabel> labels;
  RahpAccumulator acc(default_thresholds(), cfg.match);
  for (int idx : which) {
    const SampleRecord& rec = m.samples[idx];
    const TrainingSample s = load_sample(fs::path(data) / rec.path);
    const auto scene = std::find_if(m.scenes.begin(), m.scenes.end(), [&](const SceneRecord& r) { return r.sim == rec.sim; });
    require(scene != m.scenes.end(), ErrorCode::Format, "manifest lacks scene " + std::to_string(rec.sim));
    const SceneGeometry geometry(scene->scene, specs);
    const Rescorer rescore(scene->scene, geometry, specs, cfg.gripper, cfg.planner.quality);
    const std::vector<PredictedGrasp> pred = predict(s.points, c, pcfg, derive_seed(o.seed, idx), o.jobs);
    std::vector<EvalPrediction> ep(pred.size());
    parallel_for(pred.size(), o.jobs, [&](std::size_t i) {
      ep[i] = EvalPrediction{pred[i].grasp, pred[i].category, rescore(pred[i].grasp), pred[i].source};
    });
    std::vector<EvalLabel> el;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.masks[i] == kMaskPositive) {
        const PointLabel& l = s.labels[i];
        el.push_back({Grasp{s.points[i], Vec3(l[0], l[1], l[2]), Vec3(l[3], l[4], l[5]), 0.0}, static_cast<int>(i)});
      }
    acc.add(ep, el);
    std::cout << rec.path << ": " << pred.size() << " predictions, " << el.size() << " label grasps\n";
  }
  const EvalReport report = acc.report(cfg.target_precision);
  Json j = to_json(report);
  j["samples"] = which.size();
  if (!out.empty()) write_json_file(out, j);
  if (const EvalRow* r = report.row_at(kCategoryThreshold))
    std::cout << "threshold " << r->threshold << ": precision " << r->precision() << " recall " << r->recall()
              << " predictions " << r->predictions << '\n';
  if (report.selected) {
    const EvalRow& r = report.rows[*report.selected];
    std::cout << "RAHP at precision " << report.target_precision << ": threshold " << r.threshold << " recall "
              << r.recall() << '\n';
  } else {
    std::cout << "no threshold reaches precision " << report.target_precision << '\n';
  }
  return 0;
}

int run_inspect(const std::string& path) {
  const TrainingSample s = load_sample(path);
  std::cout << "# points " << s.size() << " labels " << s.labels.size() << " masks " << s.masks.size() << '\n'
            << "# x y z l0 l1 l2 l3 l4 l5 l6 l7 mask\n"
            << std::setprecision(9);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec3& p = s.points[i];
    std::cout << p.x() << ' ' << p.y() << ' ' << p.z();
    for (double v : s.labels[i]) std::cout << ' ' << v;
    std::cout << ' ';
    for (auto b : s.masks[i]) std::cout << int(b);
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic grasp data, training and evaluation"};
  app.require_subcommand(1);

  CommonOptions plan_o, gen_o, train_o, predict_o, eval_o, inspect_o;
  std::string models, out, grasps, data, checkpoint, cloud, sample;
  int samples = 0, rotations = 0, sims = 0, cams = 0, epochs = -1;
  double threshold = -1;
  bool all_samples = false;

  auto* plan = app.add_subcommand("plan", "Plan single-object grasps for every model");
  plan->add_option("--models", models, "Model library file or directory of meshes")->required();
  plan->add_option("--out", out, "Output directory for grasp sets")->required();
  plan->add_option("--samples", samples, "Surface samples per model");
  plan->add_option("--rotations", rotations, "Opening rotations per point");
  add_common(plan, plan_o);

  auto* gen = app.add_subcommand("gen", "Generate a training dataset");
  gen->add_option("--models", models, "Model library file or directory of meshes")->required();
  gen->add_option("--grasps", grasps, "Directory of grasp sets from plan")->required();
  gen->add_option("--out", out, "Dataset directory")->required();
  gen->add_option("--sims", sims, "Number of simulated scenes");
  gen->add_option("--cams", cams, "Cameras per scene");
  add_common(gen, gen_o);

  auto* tr = app.add_subcommand("train", "Train the point network on a dataset");
  tr->add_option("--data", data, "Dataset directory")->required();
  tr->add_option("--out", out, "Checkpoint file")->required();
  tr->add_option("--epochs", epochs, "Training epochs");
  add_common(tr, train_o);

  auto* pr = app.add_subcommand("predict", "Predict grasps on a point cloud");
  pr->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  pr->add_option("--cloud", cloud, "Sample (.pngd) or text file of x y z rows")->required();
  pr->add_option("--out", out, "Grasp export (stdout if omitted)");
  pr->add_option("--threshold", threshold, "Category threshold");
  add_common(pr, predict_o);

  auto* ev = app.add_subcommand("eval", "Threshold sweep and RAHP on held-out samples");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  ev->add_option("--data", data, "Dataset directory")->required();
  ev->add_option("--models", models, "Model library, needed when models are mesh files");
  ev->add_option("--out", out, "JSON report");
  ev->add_flag("--all", all_samples, "Evaluate every sample instead of the held-out split");
  add_common(ev, eval_o);

  auto* in = app.add_subcommand("inspect", "Dump a sample as text");
  in->add_option("sample", sample, "Sample file")->required();
  add_common(in, inspect_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: Usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*plan) return run_plan(models, out, samples, rotations, plan_o);
    if (*gen) return run_gen(models, grasps, out, sims, cams, gen_o);
    if (*tr) return run_train(data, out, epochs, train_o);
    if (*pr) return run_predict(checkpoint, cloud, out, threshold, predict_o);
    if (*ev) return run_eval(checkpoint, data, models, out, all_samples, eval_o);
    if (*in) return run_inspect(sample);
  } catch (const UsageError& e) {
    std::cerr << "error: " << to_string(e.code) << ": " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
