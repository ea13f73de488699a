// Acceptance suite: one PASS / FAIL / BLOCKED line per criterion.
//
// Exit status: 0 when every selected criterion passes, 1 on any FAIL,
// 77 when nothing failed but something could not run (BLOCKED).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli.hpp"
#include "oracles.hpp"
#include "sns/evaluation.hpp"
#include "sns/log.hpp"
#include "sns/report.hpp"
#include "sns/synthetic.hpp"
#include "sns/training.hpp"

using namespace sns;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// ---- pinned tolerances and budgets ---------------------------------------
constexpr double kGradRelTol = 1e-4;
constexpr double kGradEps = 1e-5;
constexpr double kGradSeconds = 60.0;
constexpr double kAnchorTol = 1e-9;
constexpr std::size_t kPoolingScenes = 100;
constexpr std::size_t kMetricCases = 100;
constexpr double kMetricTol = 1e-12;
constexpr std::size_t kLearningSteps = 200;
constexpr double kLearningAde = 0.2;
constexpr double kLearningNllDrop = 0.5;
constexpr double kLearningSeconds = 600.0;
constexpr std::size_t kSensitivitySteps = 300;
constexpr std::size_t kSensitivityMinWindows = 20;
constexpr double kAverageTol = 1e-12;

enum class Verdict { Pass, Fail, Blocked };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Blocked: return "BLOCKED";
  }
  return "?";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int run_cli(std::vector<std::string> args, std::string* out = nullptr) {
  std::ostringstream o, e;
  args.insert(args.begin(), "-q");
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::cerr << e.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Obstacle scenes with semantic rasters, laid out as a scenes.json directory.
fs::path write_obstacle_scenes(const fs::path& dir, std::size_t count, std::uint64_t seed) {
  fs::create_directories(dir);
  json legend = json::object();
  for (std::size_t c = 0; c < kSemanticClassCount; ++c) {
    legend[std::to_string(c)] = std::string(class_name(static_cast<SemanticClass>(c)));
  }
  std::ofstream(dir / "legend.json") << legend.dump(2);
  json list = json::array();
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = "obstacle" + std::to_string(i + 1);
    ObstacleOptions o;
    o.seed = seed + i;
    const ObstacleScene s = obstacle_scene(name, o);
    save_scene(s.scene, dir / (name + ".txt"));
    const auto& g = s.semantic.transform;
    Raster r;
    r.rows = g.rows;
    r.cols = g.cols;
    r.values.resize(g.rows * g.cols);
    for (std::size_t row = 0; row < g.rows; ++row) {
      for (std::size_t col = 0; col < g.cols; ++col) r.values[(g.rows - 1 - row) * g.cols + col] = s.semantic.at(row, col);
    }
    save_pgm(r, dir / (name + ".pgm"));
    list.push_back({{"name", name},
                    {"path", name + ".txt"},
                    {"frame_step", 1},
                    {"semantic",
                     {{"raster", name + ".pgm"}, {"legend", "legend.json"}, {"origin", {g.origin.x, g.origin.y}},
                      {"pixel_size", g.cell_size}}}});
  }
  std::ofstream(dir / "scenes.json") << json{{"scenes", list}}.dump(2);
  return dir / "scenes.json";
}

// Checks a finished loo directory: finite metrics, Table-format report,
// averages equal to the mean of the scene rows, published values shown.
Outcome check_loo_output(const fs::path& dir, const std::string& printed, std::size_t scenes) {
  const auto rows = read_results_csv(dir / "results.csv");
  for (const auto& r : rows) {
    if (!std::isfinite(r.ade) || !std::isfinite(r.fde)) {
      return {Verdict::Fail, "non-finite metric for " + r.scene + "/" + r.variant};
    }
  }
  const ReportTable t = build_report(rows);
  if (t.scenes.size() != scenes || t.variants.size() != 5) {
    return {Verdict::Fail, fmt("report has %zu scenes x %zu variants", t.scenes.size(), t.variants.size())};
  }
  double worst = 0.0;
  for (const std::string& v : t.variants) {
    for (bool f : {false, true}) {
      double s = 0;
      for (const std::string& sc : t.scenes) s += f ? t.find(sc, v)->fde : t.find(sc, v)->ade;
      worst = std::max(worst, std::abs(t.average(v, f).mean - s / static_cast<double>(t.scenes.size())));
    }
  }
  const std::string report = slurp(dir / "report.txt");
  const bool layout = report.find("ADE (m)") != std::string::npos && report.find("FDE (m)") != std::string::npos &&
                      report.find("Average") != std::string::npos;
  const bool reference = printed.find("Published reference values") != std::string::npos &&
                         printed.find("0.36") != std::string::npos && printed.find("1.81") != std::string::npos;
  const bool ok = worst <= kAverageTol && layout && reference;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("%zu rows finite, |avg - mean(rows)| = %.2e (tol %.0e), layout %s, published reference %s",
              rows.size(), worst, kAverageTol, layout ? "ok" : "missing", reference ? "shown" : "missing")};
}

// ---- criteria ---------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  auto toy = oracle::Toy::make(5, Variant::Full, false);
  const auto r =
      oracle::check_gradients(toy->params, [&](const ModelParams& p) { return toy->loss(p); }, kGradEps);
  const double secs = seconds_since(t0);
  const bool ok = r.max_rel_error < kGradRelTol && secs < kGradSeconds && r.checked == toy->params.parameter_count();
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("%zu parameters, max rel err %.2e at %s (tol %.0e), %.2fs (limit %.0fs)", r.checked, r.max_rel_error,
              r.worst.c_str(), kGradRelTol, secs, kGradSeconds)};
}

Outcome loss_anchor() {
  const GaussianHead head{Tensor::from({1, 5}, {0, 0, 0, 0, 0})};
  const std::vector<std::size_t> rows{0};
  const std::vector<Vec2> truth{{0, 0}};
  const double got = gaussian_nll(head, rows, truth).item();
  const double closed_form = -std::log(oracle::bivariate_density(head.params(0), {0, 0}));
  const double err = std::max(std::abs(got - closed_form), std::abs(got - std::log(2.0 * std::numbers::pi)));
  return {err < kAnchorTol ? Verdict::Pass : Verdict::Fail,
          fmt("NLL %.12f, closed form %.12f, |diff| %.1e (tol %.0e)", got, closed_form, err, kAnchorTol)};
}

Outcome pooling_equivalence() {
  oracle::PoolingComparison total;
  for (std::uint64_t seed = 1; seed <= kPoolingScenes; ++seed) {
    const auto r = oracle::compare_pooling(seed);
    total.social += r.social;
    total.navigation += r.navigation;
    total.semantic += r.semantic;
    total.entries += r.entries;
  }
  const bool ok = total.social == 0 && total.navigation == 0 && total.semantic == 0;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("%zu scenes, %zu entries; mismatches social %zu, navigation %zu, semantic %zu", kPoolingScenes,
              total.entries, total.social, total.navigation, total.semantic)};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> np(1, 8), ns(1, 12);
  std::uniform_real_distribution<double> u(-20, 20);
  double worst = 0.0;
  for (std::size_t c = 0; c < kMetricCases; ++c) {
    const std::size_t peds = np(rng), steps = ns(rng);
    std::vector<Trajectory> p(peds, Trajectory(steps)), t(peds, Trajectory(steps));
    for (std::size_t k = 0; k < peds; ++k) {
      for (std::size_t i = 0; i < steps; ++i) {
        p[k][i] = {u(rng), u(rng)};
        t[k][i] = {u(rng), u(rng)};
      }
    }
    worst = std::max(worst, std::abs(ade(p, t) - oracle::flat_ade(p, t)));
    worst = std::max(worst, std::abs(fde(p, t) - oracle::flat_fde(p, t)));
  }
  std::vector<Trajectory> truth(2, Trajectory(12)), shifted(2, Trajectory(12));
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < 12; ++i) {
      truth[k][i] = {static_cast<double>(i) * 0.5, static_cast<double>(k) - 1.25};
      shifted[k][i] = {truth[k][i].x + 3.0, truth[k][i].y + 4.0};
    }
  }
  const double offset = ade(shifted, truth);
  const bool ok = worst <= kMetricTol && offset == 5.0;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("%zu cases, max |metric - flat loop| %.1e (tol %.0e); offset (3,4) ADE = %.17g", kMetricCases, worst,
              kMetricTol, offset)};
}

double mean_nll(std::span<const TrainingScene> scenes, const TrainConfig& cfg, const ModelParams& p) {
  double total = 0.0;
  std::size_t terms = 0;
  for (const Window& w : training_windows(scenes, cfg)) {
    const auto out = forward_window(w, scenes[scene_index_of(scenes, w)].context, p, {});
    if (!out.loss.defined()) continue;
    total += out.loss.item();
    terms += out.terms;
  }
  return total / static_cast<double>(terms);
}

Outcome learning_sanity() {
  const auto t0 = std::chrono::steady_clock::now();
  ConstantVelocityOptions o;
  o.pedestrians = 20;
  o.seed = 11;
  const Scene train_scene = constant_velocity_scene("train", o);
  o.seed = 12;
  const Scene test_scene = constant_velocity_scene("test", o);

  ModelConfig mc;
  mc.variant = Variant::Vanilla;
  TrainConfig tc;
  tc.max_steps = kLearningSteps;
  tc.epochs = 1000;
  const TrainingScene ts{&train_scene, {nullptr, nullptr, train_scene.centroid()}};
  const std::span<const TrainingScene> scenes(&ts, 1);

  const ModelParams init = ModelParams::initialize(mc, 1);
  const double nll0 = mean_nll(scenes, tc, init);
  const TrainResult r = train(scenes, init.clone(), tc);
  const double nll1 = mean_nll(scenes, tc, r.params);

  const SceneContext ctx{nullptr, nullptr, test_scene.centroid()};
  ModelPredictor model(r.params);
  const EvalResult er = evaluate(test_scene, ctx, model, EvalConfig{});
  PersistencePredictor persist;
  const EvalResult pr = evaluate(test_scene, ctx, persist, EvalConfig{});
  const double secs = seconds_since(t0);
  const double drop = (nll0 - nll1) / std::abs(nll0);
  const bool ok = er.ade < kLearningAde && drop > kLearningNllDrop && secs < kLearningSeconds;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("held-out ADE %.3f m (target < %.1f; persistence baseline %.3f), mean NLL %.3f -> %.3f (drop %.0f%%, "
              "target > %.0f%%), %zu steps, %.1fs",
              er.ade, kLearningAde, pr.ade, nll0, nll1, 100.0 * drop, 100.0 * kLearningNllDrop, r.log.steps.size(),
              secs)};
}

Outcome mechanism_sensitivity() {
  ObstacleOptions oo;
  oo.pixel = 0.25;
  std::vector<ObstacleScene> train_scenes;
  for (std::uint64_t i = 0; i < 6; ++i) {
    oo.seed = 100 + i;
    train_scenes.push_back(obstacle_scene("train" + std::to_string(i), oo));
  }
  oo.seed = 999;
  const ObstacleScene test = obstacle_scene("test", oo);
  std::vector<TrainingScene> ts;
  for (const auto& s : train_scenes) ts.push_back({&s.scene, {nullptr, &s.semantic, s.scene.centroid()}});

  std::size_t inside[2] = {0, 0}, windows = 0;
  const Variant variants[2] = {Variant::Vanilla, Variant::SocialSem};
  for (int v = 0; v < 2; ++v) {
    ModelConfig mc;
    mc.variant = variants[v];
    mc.hidden = 32;
    mc.embed = 16;
    mc.map_cell = 0.25;
    TrainConfig tc;
    tc.max_steps = kSensitivitySteps;
    tc.epochs = 1000;
    const TrainResult r = train(ts, ModelParams::initialize(mc, 1), tc);
    ModelPredictor mp(r.params);
    std::vector<WindowPrediction> preds;
    const EvalResult er =
        evaluate(test.scene, {nullptr, &test.semantic, test.scene.centroid()}, mp, EvalConfig{}, &preds);
    windows = er.windows;
    for (const auto& p : preds) {
      for (const auto& traj : p.predicted) {
        for (const Vec2& q : traj) inside[v] += test.obstacle.contains(q) ? 1 : 0;
      }
    }
  }
  const bool ok = inside[1] < inside[0] && windows >= kSensitivityMinWindows;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("rollout points inside the obstacle: vanilla %zu, SS %zu over %zu test windows (need SS < vanilla, "
              ">= %zu windows)",
              inside[0], inside[1], windows, kSensitivityMinWindows)};
}

Outcome end_to_end_smoke() {
  const char* data = std::getenv("SNS_DATA_DIR");
  if (data == nullptr || !fs::exists(fs::path(data) / "scenes.json")) {
    return {Verdict::Blocked,
            "ETH/UCY annotations not available (set SNS_DATA_DIR to a directory with scenes.json listing the five "
            "scenes and their semantic maps); see synthetic_loo_smoke for the same path on synthetic data"};
  }
  oracle::TempDir dir("acc7");
  std::string printed;
  const int code = run_cli({"loo", "--scenes", (fs::path(data) / "scenes.json").string(), "--subsample", "0.05",
                            "--epochs", "2", "--out", (dir.path / "loo").string()},
                           &printed);
  if (code != 0) return {Verdict::Fail, fmt("loo exited with %d", code)};
  return check_loo_output(dir.path / "loo", printed, 5);
}

Outcome determinism() {
  oracle::TempDir dir("acc8");
  const fs::path scenes = write_obstacle_scenes(dir.path / "data", 3, 70);
  const std::vector<std::string> model{"--hidden", "16", "--embed", "8", "--social-grid", "4", "--nav-grid", "8",
                                       "--sem-grid", "4", "--map-cell", "0.2", "--subsample", "0.1"};
  // Both runs evaluate the first run's checkpoint so the commands are
  // identical; the two trained checkpoints are compared like any other file.
  const std::string checkpoint = (dir.path / "a" / "train" / "checkpoint.bin").string();
  auto commands = [&](const fs::path& root) {
    std::vector<std::vector<std::string>> cmds;
    cmds.push_back({"build-navmap", "--scenes", scenes.string(), "--out", (root / "navmap").string()});
    auto train_cmd = std::vector<std::string>{"train", "--scenes", scenes.string(), "--held-out", "obstacle3",
                                              "--variant", "SNS", "--epochs", "2", "--out", (root / "train").string()};
    train_cmd.insert(train_cmd.end(), model.begin(), model.end());
    cmds.push_back(train_cmd);
    cmds.push_back({"eval", "--scenes", scenes.string(), "--held-out", "obstacle3", "--checkpoint",
                    checkpoint, "--samples", "3", "--subsample", "0.2", "--out",
                    (root / "eval").string()});
    cmds.push_back({"predict", "--scenes", scenes.string(), "--held-out", "obstacle3", "--checkpoint",
                    checkpoint, "--subsample", "0.2", "--out",
                    (root / "predict").string()});
    auto loo = std::vector<std::string>{"loo", "--scenes", scenes.string(), "--held-out", "obstacle1", "obstacle2",
                                        "--epochs", "1", "--out", (root / "loo").string()};
    loo.insert(loo.end(), model.begin(), model.end());
    cmds.push_back(loo);
    return cmds;
  };
  for (const char* run : {"a", "b"}) {
    for (const auto& c : commands(dir.path / run)) {
      if (run_cli(c) != 0) return {Verdict::Fail, "command " + c.front() + " failed"};
    }
  }
  std::size_t files = 0, differing = 0;
  std::string first_diff;
  for (const auto& e : fs::recursive_directory_iterator(dir.path / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir.path / "a");
    ++files;
    const std::string a = slurp(e.path()), b = slurp(dir.path / "b" / rel);
    if (a != b) {
      ++differing;
      if (first_diff.empty()) first_diff = rel.string();
    }
  }
  const bool ok = differing == 0 && files > 10;
  return {ok ? Verdict::Pass : Verdict::Fail,
          fmt("5 commands run twice, %zu output files compared, %zu differ%s%s", files, differing,
              first_diff.empty() ? "" : " (first: ", first_diff.empty() ? "" : (first_diff + ")").c_str())};
}

Outcome synthetic_loo_smoke() {
  oracle::TempDir dir("smoke");
  const fs::path scenes = write_obstacle_scenes(dir.path / "data", 5, 300);
  std::string printed;
  const int code = run_cli({"loo", "--scenes", scenes.string(), "--subsample", "0.05", "--epochs", "2", "--out",
                            (dir.path / "loo").string()},
                           &printed);
  if (code != 0) return {Verdict::Fail, fmt("loo exited with %d", code)};
  return check_loo_output(dir.path / "loo", printed, 5);
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "gradient correctness", gradient_correctness},
    {2, "closed-form loss anchor", loss_anchor},
    {3, "pooling oracle equivalence", pooling_equivalence},
    {4, "metric oracles", metric_oracles},
    {5, "learning sanity", learning_sanity},
    {6, "mechanism sensitivity", mechanism_sensitivity},
    {7, "end-to-end smoke (ETH/UCY)", end_to_end_smoke},
    {8, "determinism", determinism},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria", "sns_acceptance"};
  std::vector<int> only;
  bool smoke = false;
  app.add_option("--only", only, "Run only these criteria (1-8)")->check(CLI::Range(1, 8));
  app.add_flag("--synthetic-smoke", smoke, "Run the five-scene synthetic leave-one-out smoke instead");
  CLI11_PARSE(app, argc, argv);
  set_log_level(LogLevel::Quiet);

  std::vector<std::pair<std::string, Outcome>> results;
  auto record = [&](const std::string& label, Outcome (*fn)()) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Verdict::Fail, std::string("exception: ") + e.what()};
    }
    std::cout << label << " " << verdict_name(o.verdict) << ": " << o.detail << std::endl;
    results.emplace_back(label, o);
  };
  if (smoke) {
    record("[synthetic loo smoke]", synthetic_loo_smoke);
  } else {
    for (const Criterion& c : kCriteria) {
      if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
      record(fmt("[criterion %d] %s", c.id, c.name), c.run);
    }
  }
  bool failed = false, blocked = false;
  for (const auto& [label, o] : results) {
    failed = failed || o.verdict == Verdict::Fail;
    blocked = blocked || o.verdict == Verdict::Blocked;
  }
  return failed ? 1 : blocked ? 77 : 0;
}
