#include "sns/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include "sns/error.hpp"

namespace sns {

namespace {

double dist(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

void check_aligned(std::span<const Trajectory> predicted, std::span<const Trajectory> truth) {
  if (predicted.size() != truth.size()) {
    throw DimensionError("metric: " + std::to_string(predicted.size()) + " predicted vs " +
                         std::to_string(truth.size()) + " ground-truth trajectories");
  }
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    if (predicted[k].size() != truth[k].size()) {
      throw DimensionError("metric: trajectory " + std::to_string(k) + " has " +
                           std::to_string(predicted[k].size()) + " predicted and " +
                           std::to_string(truth[k].size()) + " true steps");
    }
    if (predicted[k].empty()) throw DimensionError("metric: empty trajectory");
  }
}

}  // namespace

double ade(std::span<const Trajectory> predicted, std::span<const Trajectory> truth,
           std::size_t steps_per_ped) {
  check_aligned(predicted, truth);
  if (predicted.empty()) throw DimensionError("ade: no trajectories");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    for (std::size_t t = 0; t < predicted[k].size(); ++t) sum += dist(predicted[k][t], truth[k][t]);
    count += steps_per_ped > 0 ? steps_per_ped : predicted[k].size();
  }
  return sum / static_cast<double>(count);
}

double fde(std::span<const Trajectory> predicted, std::span<const Trajectory> truth) {
  check_aligned(predicted, truth);
  if (predicted.empty()) throw DimensionError("fde: no trajectories");
  double sum = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) sum += dist(predicted[k].back(), truth[k].back());
  return sum / static_cast<double>(predicted.size());
}

Trajectory future_truth(const Window& window, std::size_t target_index) {
  const Track& t = window.scene->tracks.at(window.targets.at(target_index));
  Trajectory out;
  for (std::size_t f = window.spec.obs_len; f < window.spec.total_len; ++f) {
    out.push_back(t.at(window.start + f));
  }
  return out;
}

Trajectory observed_truth(const Window& window, std::size_t target_index) {
  const Track& t = window.scene->tracks.at(window.targets.at(target_index));
  Trajectory out;
  for (std::size_t f = 0; f < window.spec.obs_len; ++f) out.push_back(t.at(window.start + f));
  return out;
}

ModelPredictor::ModelPredictor(const ModelParams& params, std::size_t samples, std::uint64_t seed)
    : params_(params), samples_(samples), seed_(seed) {}

std::vector<std::vector<Trajectory>> ModelPredictor::predict(const Window& window,
                                                             const SceneContext& context) {
  std::vector<std::vector<Trajectory>> out;
  if (samples_ == 0) {
    WindowOutput r = forward_window(window, context, params_, {RolloutMode::Mean, false, false});
    out.push_back(std::move(r.predicted));
    return out;
  }
  for (std::size_t s = 0; s < samples_; ++s) {
    std::mt19937_64 rng(seed_ * 1000003u + window.start * 7919u + s);
    WindowOutput r = forward_window(window, context, params_, {RolloutMode::Sample, false, false}, &rng);
    out.push_back(std::move(r.predicted));
  }
  return out;
}

bool ModelPredictor::needs_navigation() const { return uses_navigation(params_.config().variant); }

std::string ModelPredictor::name() const { return std::string(to_string(params_.config().variant)); }

std::vector<std::vector<Trajectory>> OraclePredictor::predict(const Window& window, const SceneContext&) {
  std::vector<Trajectory> one;
  for (std::size_t k = 0; k < window.targets.size(); ++k) one.push_back(future_truth(window, k));
  return {one};
}

std::vector<std::vector<Trajectory>> PersistencePredictor::predict(const Window& window,
                                                                   const SceneContext&) {
  std::vector<Trajectory> one;
  for (std::size_t k = 0; k < window.targets.size(); ++k) {
    const Vec2 last = observed_truth(window, k).back();
    one.emplace_back(window.spec.pred_len(), last);
  }
  return {one};
}

AdeDenominator parse_ade_denominator(std::string_view name) {
  if (name == "predicted") return AdeDenominator::Predicted;
  if (name == "window") return AdeDenominator::Window;
  throw ConfigError("unknown ADE denominator '" + std::string(name) + "' (expected predicted|window)");
}

std::vector<Window> evaluation_windows(const Scene& scene, const EvalConfig& cfg) {
  if (!(cfg.subsample > 0.0 && cfg.subsample <= 1.0)) throw ConfigError("subsample must lie in (0, 1]");
  std::vector<Window> all = make_windows(scene, cfg.stride, cfg.window);
  if (cfg.subsample >= 1.0 || all.empty()) return all;
  std::mt19937_64 rng(cfg.seed ^ 0x9u);
  std::bernoulli_distribution keep(cfg.subsample);
  std::vector<Window> kept;
  for (Window& w : all) {
    if (keep(rng)) kept.push_back(std::move(w));
  }
  if (kept.empty()) kept.push_back(std::move(all.front()));
  return kept;
}

EvalResult evaluate(const Scene& test_scene, const SceneContext& context, Predictor& predictor,
                    const EvalConfig& cfg, std::vector<WindowPrediction>* predictions) {
  const std::vector<Window> windows = evaluation_windows(test_scene, cfg);
  if (windows.empty()) {
    throw DataError("scene '" + test_scene.name + "' has no pedestrian visible for " +
                    std::to_string(cfg.window.total_len) + " consecutive frames");
  }
  SceneContext ctx = context;
  std::optional<NavigationMapBuilder> online;
  NavigationMap full;
  if (predictor.needs_navigation()) {
    switch (cfg.navmap) {
      case NavMapSource::Online:
        cfg.nav_grid.validate();
        online.emplace(cfg.nav_grid, cfg.kernel);
        ctx.navigation = &online->map();
        break;
      case NavMapSource::FullScene: {
        const Scene* one[] = {&test_scene};
        full = build_navigation_map(one, cfg.nav_grid, cfg.kernel);
        ctx.navigation = &full;
        break;
      }
      case NavMapSource::Provided:
        if (ctx.navigation == nullptr) throw ConfigError("evaluation needs a navigation map");
        break;
    }
  }

  const std::size_t steps_per_ped = cfg.ade_denominator == AdeDenominator::Window ? cfg.window.total_len : 0;
  std::vector<std::vector<Trajectory>> pooled_pred;  // per sample
  std::vector<Trajectory> pooled_truth;
  EvalResult result;
  result.scene = test_scene.name;
  result.variant = predictor.name();
  std::size_t next_frame = 0;

  for (const Window& w : windows) {
    if (online) {
      const std::size_t last_obs = w.start + w.spec.obs_len - 1;
      for (; next_frame <= last_obs; ++next_frame) {
        for (std::size_t ti : test_scene.frame_tracks[next_frame]) {
          online->add_point(test_scene.tracks[ti].at(next_frame));
        }
      }
    }
    std::vector<std::vector<Trajectory>> samples = predictor.predict(w, ctx);
    if (samples.empty()) throw Error("predictor returned no samples");
    if (pooled_pred.empty()) pooled_pred.resize(samples.size());
    if (samples.size() != pooled_pred.size()) throw Error("predictor changed its sample count");

    std::vector<Trajectory> truth;
    for (std::size_t k = 0; k < w.targets.size(); ++k) truth.push_back(future_truth(w, k));
    WindowMetrics m;
    m.start = w.start;
    m.targets = w.targets.size();
    for (std::size_t s = 0; s < samples.size(); ++s) {
      m.ade += ade(samples[s], truth, steps_per_ped);
      m.fde += fde(samples[s], truth);
      pooled_pred[s].insert(pooled_pred[s].end(), samples[s].begin(), samples[s].end());
    }
    m.ade /= static_cast<double>(samples.size());
    m.fde /= static_cast<double>(samples.size());
    result.per_window.push_back(m);
    pooled_truth.insert(pooled_truth.end(), truth.begin(), truth.end());
    if (predictions != nullptr) predictions->push_back({w, samples.front()});
  }

  for (const auto& p : pooled_pred) {
    result.ade += ade(p, pooled_truth, steps_per_ped);
    result.fde += fde(p, pooled_truth);
  }
  result.ade /= static_cast<double>(pooled_pred.size());
  result.fde /= static_cast<double>(pooled_pred.size());
  result.pedestrians = pooled_truth.size();
  result.windows = windows.size();
  return result;
}

void write_results_csv(const std::filesystem::path& path, std::span<const EvalResult> results) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "scene,variant,ade,fde,n_windows,n_peds\n";
  for (const EvalResult& r : results) {
    out << r.scene << ',' << r.variant << ',' << r.ade << ',' << r.fde << ',' << r.windows << ','
        << r.pedestrians << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<EvalResult> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty results file");
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    return f;
  };
  const auto header = split(line);
  auto col = [&](std::string_view name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(path.string() + ": missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_scene = col("scene"), c_var = col("variant"), c_ade = col("ade"),
                    c_fde = col("fde"), c_win = col("n_windows"), c_ped = col("n_peds");
  std::vector<EvalResult> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    try {
      EvalResult r;
      r.scene = f[c_scene];
      r.variant = f[c_var];
      r.ade = std::stod(f[c_ade]);
      r.fde = std::stod(f[c_fde]);
      r.windows = std::stoul(f[c_win]);
      r.pedestrians = std::stoul(f[c_ped]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

void write_predictions_csv(const std::filesystem::path& path, const Scene& scene,
                           std::span<const WindowPrediction> predictions) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  out << "window,track,ped_id,frame,kind,x,y\n";
  for (std::size_t wi = 0; wi < predictions.size(); ++wi) {
    const WindowPrediction& p = predictions[wi];
    const Window& w = p.window;
    for (std::size_t k = 0; k < w.targets.size(); ++k) {
      const Track& t = scene.tracks[w.targets[k]];
      for (std::size_t f = 0; f < w.spec.total_len; ++f) {
        const std::size_t fi = w.start + f;
        const Vec2 v = t.at(fi);
        out << wi << ',' << w.targets[k] << ',' << t.ped_id << ',' << scene.frame_ids[fi] << ','
            << (f < w.spec.obs_len ? "observed" : "truth") << ',' << v.x << ',' << v.y << '\n';
      }
      if (k < p.predicted.size()) {
        for (std::size_t s = 0; s < p.predicted[k].size(); ++s) {
          const std::size_t fi = w.start + w.spec.obs_len + s;
          out << wi << ',' << w.targets[k] << ',' << t.ped_id << ',' << scene.frame_ids[fi]
              << ",predicted," << p.predicted[k][s].x << ',' << p.predicted[k][s].y << '\n';
        }
      }
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void write_window_svg(const std::filesystem::path& path, const Scene& scene,
                      const WindowPrediction& prediction) {
  const Window& w = prediction.window;
  std::vector<Trajectory> observed, truth;
  for (std::size_t k = 0; k < w.targets.size(); ++k) {
    observed.push_back(observed_truth(w, k));
    truth.push_back(future_truth(w, k));
  }
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  auto grow = [&](const std::vector<Trajectory>& ts) {
    for (const auto& t : ts) {
      for (Vec2 v : t) {
        x0 = std::min(x0, v.x);
        y0 = std::min(y0, v.y);
        x1 = std::max(x1, v.x);
        y1 = std::max(y1, v.y);
      }
    }
  };
  grow(observed);
  grow(truth);
  grow(prediction.predicted);
  const double pad = 0.5;
  x0 -= pad, y0 -= pad, x1 += pad, y1 += pad;
  const double size = 480.0;
  const double scale = size / std::max(x1 - x0, y1 - y0);
  auto px = [&](Vec2 v) {
    std::ostringstream os;
    os << (v.x - x0) * scale << ',' << (y1 - v.y) * scale;
    return os.str();
  };
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (x1 - x0) * scale << "\" height=\""
      << (y1 - y0) * scale << "\">\n";
  out << "<title>" << scene.name << " frame " << scene.frame_ids[w.start] << "</title>\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  auto line = [&](const Trajectory& t, const char* color, bool dashed, const Vec2* join) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\""
        << (dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
    if (join) out << px(*join) << ' ';
    for (Vec2 v : t) out << px(v) << ' ';
    out << "\"/>\n";
  };
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const Vec2 last = observed[k].back();
    line(observed[k], "black", false, nullptr);
    line(truth[k], "green", false, &last);
    if (k < prediction.predicted.size()) line(prediction.predicted[k], "blue", true, &last);
  }
  out << "</svg>\n";
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace sns
