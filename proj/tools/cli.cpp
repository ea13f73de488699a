#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sns/checkpoint.hpp"
#include "sns/error.hpp"
#include "sns/evaluation.hpp"
#include "sns/log.hpp"
#include "sns/report.hpp"
#include "sns/scene_config.hpp"
#include "sns/training.hpp"
#include "sns/version.hpp"

namespace sns::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Options {
  std::string scenes;
  std::string out;
  std::vector<std::string> held_out;
  std::vector<std::string> only;  // build-navmap scene selection

  std::string variant = "SNS";
  std::vector<std::string> variants;
  std::size_t hidden = 128;
  std::size_t embed = 64;
  std::size_t social_grid = 8;
  double social_cell = 0.5;
  std::size_t nav_grid = 32;
  std::size_t sem_grid = 20;
  double map_cell = 0.1;
  std::string navmap_scale = "log1p";
  std::string sigma = "exp";
  std::string coords = "offset";
  bool biases = false;
  bool no_normalize = false;
  std::size_t kernel = 3;

  std::size_t epochs = 50;
  double lr = 0.003;
  double decay = 0.95;
  double clip = 10.0;
  bool no_clip = false;
  std::uint64_t seed = 1;
  std::size_t batch = 1;
  bool loss_mean = false;
  bool predict_partial = false;
  double subsample = 1.0;
  std::size_t stride = 1;
  std::size_t obs_len = 8;
  std::size_t pred_len = 12;
  std::size_t max_steps = 0;
  std::string resume;

  std::string checkpoint;
  std::string predictor = "model";
  std::size_t samples = 0;
  std::string ade_denominator = "predicted";
  bool navmap_full = false;
  std::size_t plots = 5;

  std::vector<std::string> results;
};

// ---- option groups ----------------------------------------------------

void add_scenes(CLI::App* sub, Options& o) {
  sub->add_option("--scenes", o.scenes, "Scene list (JSON)")->required()->check(CLI::ExistingFile);
}

void add_out(CLI::App* sub, Options& o) {
  sub->add_option("--out", o.out, "Output directory (default: $SNS_OUTPUT_ROOT/<command>)");
}

void add_window(CLI::App* sub, Options& o) {
  sub->add_option("--obs-len", o.obs_len, "Observed frames per window")->check(CLI::PositiveNumber);
  sub->add_option("--pred-len", o.pred_len, "Predicted frames per window")->check(CLI::PositiveNumber);
  sub->add_option("--stride", o.stride, "Frames between window starts")->check(CLI::PositiveNumber);
  sub->add_option("--subsample", o.subsample, "Fraction of windows kept (seeded)")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--seed", o.seed, "Random seed");
}

void add_model(CLI::App* sub, Options& o, bool single_variant) {
  if (single_variant) {
    sub->add_option("--variant", o.variant, "vanilla | S | SN | SS | SNS");
  } else {
    sub->add_option("--variants", o.variants, "Variants to sweep (default: all five)");
  }
  sub->add_option("--hidden", o.hidden, "LSTM hidden size D")->check(CLI::PositiveNumber);
  sub->add_option("--embed", o.embed, "Embedding size")->check(CLI::PositiveNumber);
  sub->add_option("--social-grid", o.social_grid, "Social grid N_o")->check(CLI::PositiveNumber);
  sub->add_option("--social-cell", o.social_cell, "Social cell size (m)")->check(CLI::PositiveNumber);
  sub->add_option("--nav-grid", o.nav_grid, "Navigation grid N_n")->check(CLI::PositiveNumber);
  sub->add_option("--sem-grid", o.sem_grid, "Semantic grid N_s")->check(CLI::PositiveNumber);
  sub->add_option("--map-cell", o.map_cell, "Map and semantic pooling cell size (m)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--navmap-scale", o.navmap_scale, "raw | log1p | maxnorm");
  sub->add_option("--sigma", o.sigma, "Sigma squashing: exp | softplus");
  sub->add_option("--coords", o.coords, "absolute | offset");
  sub->add_flag("--biases", o.biases, "Add bias vectors to the embedding and output layers")->default_str("false");
  sub->add_flag("--no-normalize", o.no_normalize, "Do not centre positions on the scene centroid")->default_str("false");
  sub->add_option("--kernel", o.kernel, "Navigation smoothing kernel side (odd)");
}

void add_training(CLI::App* sub, Options& o) {
  sub->add_option("--epochs", o.epochs, "Training epochs");
  sub->add_option("--lr", o.lr, "RMSprop learning rate");
  sub->add_option("--decay", o.decay, "RMSprop decay");
  sub->add_option("--clip", o.clip, "Global gradient-norm cap");
  sub->add_flag("--no-clip", o.no_clip, "Disable gradient clipping")->default_str("false");
  sub->add_option("--batch", o.batch, "Windows per optimizer step")->check(CLI::PositiveNumber);
  sub->add_flag("--loss-mean", o.loss_mean, "Average the NLL over terms instead of summing")->default_str("false");
  sub->add_flag("--predict-partial", o.predict_partial,
                "Also score pedestrians visible in part of a window")->default_str("false");
  sub->add_option("--max-steps", o.max_steps, "Stop after this many optimizer steps (0 = no limit)");
}

void add_evaluation(CLI::App* sub, Options& o) {
  sub->add_option("--samples", o.samples, "Stochastic rollouts per window (0 = mean rollout)");
  sub->add_option("--ade-denominator", o.ade_denominator, "predicted | window");
  sub->add_flag("--navmap-from-full-scene", o.navmap_full,
                "Build the held-out navigation map from the whole scene")->default_str("false");
  sub->add_option("--plots", o.plots, "SVG plots written for the first N windows");
}

// ---- helpers ------------------------------------------------------------

fs::path output_dir(const Options& o, const std::string& command) {
  if (!o.out.empty()) return o.out;
  const char* root = std::getenv("SNS_OUTPUT_ROOT");
  return fs::path(root != nullptr && *root != '\0' ? root : "runs") / command;
}

fs::path ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw DataError("cannot create directory " + p.string() + ": " + ec.message());
  return p;
}

WindowSpec window_spec(const Options& o) { return {o.obs_len, o.obs_len + o.pred_len}; }

ModelConfig model_config(const Options& o, Variant v) {
  ModelConfig c;
  c.variant = v;
  c.hidden = o.hidden;
  c.embed = o.embed;
  c.social_grid = o.social_grid;
  c.social_cell = o.social_cell;
  c.nav_grid = o.nav_grid;
  c.sem_grid = o.sem_grid;
  c.map_cell = o.map_cell;
  c.nav_scale = parse_nav_scale(o.navmap_scale);
  c.sigma = parse_sigma_squash(o.sigma);
  c.coords = parse_coords(o.coords);
  c.biases = o.biases;
  c.normalize = !o.no_normalize;
  c.validate();
  return c;
}

TrainConfig train_config(const Options& o) {
  TrainConfig t;
  t.learning_rate = o.lr;
  t.decay = o.decay;
  t.epochs = o.epochs;
  t.clip = !o.no_clip;
  t.grad_clip = o.clip;
  t.seed = o.seed;
  t.batch = o.batch;
  t.loss_mean = o.loss_mean;
  t.predict_partial = o.predict_partial;
  t.subsample = o.subsample;
  t.stride = o.stride;
  t.window = window_spec(o);
  t.max_steps = o.max_steps;
  t.validate();
  return t;
}

EvalConfig eval_config(const Options& o, const LoadedScene& test) {
  EvalConfig e;
  e.stride = o.stride;
  e.window = window_spec(o);
  e.subsample = o.subsample;
  e.seed = o.seed;
  e.ade_denominator = parse_ade_denominator(o.ade_denominator);
  e.navmap = o.navmap_full ? NavMapSource::FullScene : NavMapSource::Online;
  e.nav_grid = test.grid;
  e.kernel = SmoothingKernel::uniform(o.kernel);
  e.kernel.validate();
  return e;
}

std::vector<LoadedScene> load_all(const Options& o) {
  auto scenes = load_scenes(load_scene_config(o.scenes), o.map_cell);
  for (const LoadedScene& s : scenes) {
    log_info("scene " + s.scene.name + ": " + std::to_string(s.scene.pedestrian_count()) + " pedestrians, " +
             std::to_string(s.scene.frame_count()) + " frames");
  }
  return scenes;
}

const LoadedScene& find_scene(const std::vector<LoadedScene>& scenes, const std::string& name) {
  std::string names;
  for (const LoadedScene& s : scenes) {
    if (s.scene.name == name) return s;
    names += (names.empty() ? "" : ", ") + s.scene.name;
  }
  throw ConfigError("no scene named '" + name + "' (available: " + names + ")");
}

Vec2 scene_offset(const ModelConfig& mc, const Scene& s) { return mc.normalize ? s.centroid() : Vec2{}; }

const SemanticMap* semantic_for(const ModelConfig& mc, const LoadedScene& s) {
  if (!uses_semantic(mc.variant)) return nullptr;
  if (!s.semantic) {
    throw ConfigError("variant " + std::string(to_string(mc.variant)) + " needs a semantic map for scene '" +
                      s.scene.name + "'");
  }
  return &*s.semantic;
}

// Training scenes use navigation maps built from their own annotations.
struct TrainingSet {
  std::vector<std::unique_ptr<NavigationMap>> maps;
  std::vector<TrainingScene> scenes;
};

TrainingSet training_set(const std::vector<const LoadedScene*>& train, const ModelConfig& mc,
                         const SmoothingKernel& kernel) {
  TrainingSet set;
  for (const LoadedScene* s : train) {
    SceneContext ctx;
    ctx.offset = scene_offset(mc, s->scene);
    ctx.semantic = semantic_for(mc, *s);
    if (uses_navigation(mc.variant)) {
      const Scene* one[] = {&s->scene};
      set.maps.push_back(std::make_unique<NavigationMap>(build_navigation_map(one, s->grid, kernel)));
      ctx.navigation = set.maps.back().get();
    }
    set.scenes.push_back({&s->scene, ctx});
  }
  return set;
}

json option_values(const CLI::App& sub) {
  json j = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (name == "--help" || name == "-h") continue;
    const std::string key = opt->get_lnames().empty() ? name : opt->get_lnames().front();
    if (opt->count() > 0) {
      const auto& r = opt->results();
      if (opt->get_expected_max() > 1) {
        j[key] = r;
      } else {
        j[key] = r.empty() ? std::string("true") : r.back();
      }
    } else {
      j[key] = opt->get_default_str();
    }
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

json make_manifest(const CLI::App& sub, const std::string& command, const Options& o) {
  json m;
  m["command"] = command;
  m["version"] = std::string(version());
  m["seed"] = o.seed;
  m["options"] = option_values(sub);
  // Where the outputs go is not part of the run, and keeping it out makes
  // reruns into another directory byte-identical.
  m["options"].erase("out");
  return m;
}

void write_manifest(const fs::path& dir, const json& manifest) {
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

// Trains on `train`, writing checkpoint.bin and train_log.csv into `dir`.
ModelParams run_training(const std::vector<const LoadedScene*>& train, const ModelConfig& mc,
                         const TrainConfig& tc, const SmoothingKernel& kernel, const fs::path& dir,
                         const json& manifest, const std::string& resume_path, std::ostream& out) {
  if (train.empty()) throw ConfigError("no training scenes");
  const TrainingSet set = training_set(train, mc, kernel);
  ModelParams params;
  std::optional<TrainingState> resume;
  const fs::path log_path = dir / "train_log.csv";
  if (!resume_path.empty()) {
    Checkpoint ck = load_checkpoint(resume_path);
    if (!ck.training) throw ConfigError(resume_path + " carries no training state to resume from");
    if (model_config_to_json(ck.params.config()) != model_config_to_json(mc)) {
      throw ConfigError("resume checkpoint model configuration differs from the requested one");
    }
    params = std::move(ck.params);
    resume = std::move(ck.training);
  } else {
    params = ModelParams::initialize(mc, tc.seed);
    std::error_code ec;
    fs::remove(log_path, ec);
  }
  const std::string run_config = manifest.dump();
  const fs::path ckpt = dir / "checkpoint.bin";
  std::vector<StepRecord> pending;
  TrainHooks hooks;
  hooks.on_step = [&](const StepRecord& r) { pending.push_back(r); };
  hooks.on_epoch = [&](std::size_t epoch, const ModelParams& p, const TrainingState& st) {
    append_training_log(log_path, pending);
    double mean = 0.0;
    std::size_t n = 0;
    for (const StepRecord& r : pending) {
      if (r.skipped == 0) {
        mean += r.loss;
        ++n;
      }
    }
    pending.clear();
    save_checkpoint(ckpt, p, &st, run_config);
    log_info("epoch " + std::to_string(epoch) + "/" + std::to_string(tc.epochs) + " mean loss " +
             std::to_string(n > 0 ? mean / static_cast<double>(n) : 0.0));
  };
  TrainResult result = sns::train(set.scenes, std::move(params), tc, hooks, resume);
  if (!pending.empty()) append_training_log(log_path, pending);
  save_checkpoint(ckpt, result.params, &result.state, run_config);
  out << "trained " << to_string(mc.variant) << " for " << result.state.steps_done << " steps ("
      << result.log.skipped << " windows skipped) -> " << ckpt.string() << "\n";
  return std::move(result.params);
}

std::unique_ptr<Predictor> make_predictor(const Options& o, const ModelParams* params) {
  if (o.predictor == "oracle") return std::make_unique<OraclePredictor>();
  if (o.predictor == "persistence") return std::make_unique<PersistencePredictor>();
  if (o.predictor == "model") {
    if (params == nullptr) throw ConfigError("--predictor model needs --checkpoint");
    return std::make_unique<ModelPredictor>(*params, o.samples, o.seed);
  }
  throw ConfigError("unknown predictor '" + o.predictor + "' (model|oracle|persistence)");
}

SceneContext test_context(const ModelParams* params, const LoadedScene& test) {
  SceneContext ctx;
  if (params != nullptr) {
    ctx.offset = scene_offset(params->config(), test.scene);
    ctx.semantic = semantic_for(params->config(), test);
  }
  return ctx;
}

void write_plots(const fs::path& dir, const Scene& scene, const std::vector<WindowPrediction>& preds,
                 std::size_t count) {
  if (count == 0 || preds.empty()) return;
  ensure_dir(dir);
  for (std::size_t i = 0; i < preds.size() && i < count; ++i) {
    write_window_svg(dir / ("window_" + std::to_string(preds[i].window.start) + ".svg"), scene, preds[i]);
  }
}

std::string describe(const EvalResult& r) {
  std::ostringstream os;
  os.precision(4);
  os << r.scene << " " << r.variant << ": ADE " << std::fixed << r.ade << " FDE " << r.fde << " ("
     << r.windows << " windows, " << r.pedestrians << " pedestrians)";
  return os.str();
}

std::string single_held_out(const Options& o, bool required) {
  if (o.held_out.size() > 1) throw ConfigError("--held-out takes a single scene here");
  if (o.held_out.empty()) {
    if (required) throw ConfigError("--held-out is required");
    return {};
  }
  return o.held_out.front();
}

// ---- commands -----------------------------------------------------------

int cmd_build_navmap(const CLI::App& sub, const Options& o, std::ostream& out) {
  const auto scenes = load_all(o);
  const fs::path dir = ensure_dir(output_dir(o, "build-navmap"));
  SmoothingKernel kernel = SmoothingKernel::uniform(o.kernel);
  kernel.validate();
  for (const LoadedScene& s : scenes) {
    if (!o.only.empty() && std::find(o.only.begin(), o.only.end(), s.scene.name) == o.only.end()) continue;
    const Scene* one[] = {&s.scene};
    const NavigationMap map = build_navigation_map(one, s.grid, kernel);
    save_navigation_map(map, dir / (s.scene.name + ".navmap"));
    write_navigation_preview(map, dir / (s.scene.name + ".pgm"));
    out << s.scene.name << ": " << map.transform.rows << "x" << map.transform.cols << " cells, total "
        << map.total() << " -> " << (dir / (s.scene.name + ".navmap")).string() << "\n";
  }
  write_manifest(dir, make_manifest(sub, "build-navmap", o));
  return kOk;
}

int cmd_train(const CLI::App& sub, const Options& o, std::ostream& out) {
  const auto scenes = load_all(o);
  const std::string held = single_held_out(o, false);
  if (!held.empty()) find_scene(scenes, held);
  std::vector<const LoadedScene*> train;
  for (const LoadedScene& s : scenes) {
    if (s.scene.name != held) train.push_back(&s);
  }
  const ModelConfig mc = model_config(o, parse_variant(o.variant));
  const TrainConfig tc = train_config(o);
  const fs::path dir = ensure_dir(output_dir(o, "train"));
  json manifest = make_manifest(sub, "train", o);
  manifest["model"] = json::parse(model_config_to_json(mc));
  write_manifest(dir, manifest);
  run_training(train, mc, tc, SmoothingKernel::uniform(o.kernel), dir, manifest, o.resume, out);
  return kOk;
}

int cmd_eval(const CLI::App& sub, Options o, std::ostream& out, bool predict_only) {
  std::optional<Checkpoint> ck;
  if (!o.checkpoint.empty()) {
    if (!fs::exists(o.checkpoint)) throw ConfigError("checkpoint not found: " + o.checkpoint);
    ck = load_checkpoint(o.checkpoint);
    o.map_cell = ck->params.config().map_cell;
  }
  const auto scenes = load_all(o);
  const LoadedScene& test = find_scene(scenes, single_held_out(o, true));
  const ModelParams* params = ck ? &ck->params : nullptr;
  auto predictor = make_predictor(o, params);
  const EvalConfig ec = eval_config(o, test);
  const std::string command = predict_only ? "predict" : "eval";
  const fs::path dir = ensure_dir(output_dir(o, command));
  json manifest = make_manifest(sub, command, o);
  if (params != nullptr) manifest["model"] = json::parse(model_config_to_json(params->config()));
  write_manifest(dir, manifest);

  std::vector<WindowPrediction> preds;
  EvalResult r = evaluate(test.scene, test_context(params, test), *predictor, ec, &preds);
  write_predictions_csv(dir / "predictions.csv", test.scene, preds);
  write_plots(dir / "plots", test.scene, preds, o.plots);
  if (!predict_only) {
    const EvalResult rows[] = {r};
    write_results_csv(dir / "results.csv", rows);
    out << describe(r) << "\n";
  } else {
    out << "wrote predictions for " << preds.size() << " windows -> " << (dir / "predictions.csv").string()
        << "\n";
  }
  return kOk;
}

void emit_report(const std::vector<EvalResult>& results, const fs::path& dir, std::ostream& out) {
  const ReportTable table = build_report(results);
  const std::string text = format_report(table) + format_published_reference();
  out << text;
  if (!dir.empty()) {
    write_text(dir / "report.txt", text);
    write_report_csv(dir / "report.csv", table);
  }
}

int cmd_loo(const CLI::App& sub, const Options& o, std::ostream& out) {
  const auto scenes = load_all(o);
  if (scenes.size() < 2) throw ConfigError("leave-one-out needs at least two scenes");
  std::vector<std::string> held = o.held_out;
  if (held.empty()) {
    for (const LoadedScene& s : scenes) held.push_back(s.scene.name);
  }
  std::vector<Variant> variants;
  for (const std::string& v : o.variants) variants.push_back(parse_variant(v));
  if (variants.empty()) variants.assign(std::begin(kAllVariants), std::end(kAllVariants));
  const TrainConfig tc = train_config(o);
  const fs::path dir = ensure_dir(output_dir(o, "loo"));
  const json manifest = make_manifest(sub, "loo", o);
  write_manifest(dir, manifest);

  std::vector<EvalResult> results;
  for (const std::string& name : held) {
    const LoadedScene& test = find_scene(scenes, name);
    std::vector<const LoadedScene*> train;
    for (const LoadedScene& s : scenes) {
      if (&s != &test) train.push_back(&s);
    }
    const EvalConfig ec = eval_config(o, test);
    for (Variant v : variants) {
      const ModelConfig mc = model_config(o, v);
      const fs::path run_dir = ensure_dir(dir / name / std::string(to_string(v)));
      json run_manifest = manifest;
      run_manifest["held_out"] = name;
      run_manifest["model"] = json::parse(model_config_to_json(mc));
      write_manifest(run_dir, run_manifest);
      const ModelParams params =
          run_training(train, mc, tc, ec.kernel, run_dir, run_manifest, std::string(), out);
      ModelPredictor predictor(params, o.samples, o.seed);
      std::vector<WindowPrediction> preds;
      EvalResult r = evaluate(test.scene, test_context(&params, test), predictor, ec, &preds);
      const EvalResult rows[] = {r};
      write_results_csv(run_dir / "results.csv", rows);
      write_plots(run_dir / "plots", test.scene, preds, o.plots);
      out << describe(r) << "\n";
      results.push_back(std::move(r));
    }
  }
  write_results_csv(dir / "results.csv", results);
  emit_report(results, dir, out);
  return kOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  std::vector<EvalResult> all;
  for (const std::string& path : o.results) {
    auto rows = read_results_csv(path);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  fs::path dir;
  if (!o.out.empty()) dir = ensure_dir(o.out);
  emit_report(all, dir, out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"SNS-LSTM pedestrian trajectory forecasting", "sns"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", std::string(version()));
  app.set_config("--config", "", "Run configuration file (TOML); flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "Only print errors");
  app.add_flag("-v,--verbose", verbose, "Print progress");

  auto* navmap = app.add_subcommand("build-navmap", "Build navigation maps and grayscale previews");
  add_scenes(navmap, o);
  add_out(navmap, o);
  navmap->add_option("--scene", o.only, "Restrict to these scenes");
  navmap->add_option("--kernel", o.kernel, "Smoothing kernel side (odd)");
  navmap->add_option("--map-cell", o.map_cell, "Navigation map cell size (m)")->check(CLI::PositiveNumber);

  auto* train_cmd = app.add_subcommand("train", "Train one variant");
  add_scenes(train_cmd, o);
  add_out(train_cmd, o);
  train_cmd->add_option("--held-out", o.held_out, "Scene excluded from training");
  add_model(train_cmd, o, true);
  add_training(train_cmd, o);
  add_window(train_cmd, o);
  train_cmd->add_option("--resume", o.resume, "Continue from a checkpoint with training state");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate on a held-out scene");
  auto* predict_cmd = app.add_subcommand("predict", "Write predicted trajectories for a scene");
  for (CLI::App* sub : {eval_cmd, predict_cmd}) {
    add_scenes(sub, o);
    add_out(sub, o);
    sub->add_option("--held-out", o.held_out, "Scene to evaluate")->required();
    sub->add_option("--checkpoint", o.checkpoint, "Trained checkpoint");
    sub->add_option("--predictor", o.predictor, "model | oracle | persistence");
    sub->add_option("--kernel", o.kernel, "Navigation smoothing kernel side (odd)");
    add_evaluation(sub, o);
    add_window(sub, o);
  }

  auto* loo = app.add_subcommand("loo", "Leave-one-out sweep over scenes and variants");
  add_scenes(loo, o);
  add_out(loo, o);
  loo->add_option("--held-out", o.held_out, "Held-out scenes to run (default: every scene)");
  add_model(loo, o, false);
  add_training(loo, o);
  add_evaluation(loo, o);
  add_window(loo, o);

  auto* report = app.add_subcommand("report", "Table of results with published reference values");
  report->add_option("--results", o.results, "results.csv files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", o.out, "Directory for report.txt / report.csv");

  std::vector<const char*> argv{"sns"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  set_log_level(quiet ? LogLevel::Quiet : verbose ? LogLevel::Info : LogLevel::Warn);

  try {
    if (*navmap) return cmd_build_navmap(*navmap, o, out);
    if (*train_cmd) return cmd_train(*train_cmd, o, out);
    if (*eval_cmd) return cmd_eval(*eval_cmd, o, out, false);
    if (*predict_cmd) return cmd_eval(*predict_cmd, o, out, true);
    if (*loo) return cmd_loo(*loo, o, out);
    if (*report) return cmd_report(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace sns::cli
