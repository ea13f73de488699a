#include "sns/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sns/error.hpp"
#include "sns/log.hpp"

namespace sns {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be >= 0");
  }
  if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("RMSprop decay must lie in (0, 1)");
  if (!(eps > 0.0)) throw ConfigError("RMSprop eps must be positive");
  if (clip && !(grad_clip > 0.0)) throw ConfigError("gradient clip cap must be positive");
  if (batch == 0) throw ConfigError("batch must be >= 1");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("subsample must lie in (0, 1]");
  if (stride == 0) throw ConfigError("stride must be >= 1");
}

OptState OptState::for_params(const ModelParams& params) {
  OptState s;
  for (const NamedTensor& e : params.entries()) s.mean_square.emplace_back(e.tensor.size(), 0.0);
  return s;
}

void rmsprop_step(ModelParams& params, OptState& opt, double lr, double decay, double eps) {
  auto& entries = params.entries();
  if (opt.mean_square.size() != entries.size()) {
    throw Error("rmsprop_step: optimizer state does not match parameters");
  }
  for (NamedTensor& e : entries) {
    for (double g : e.tensor.grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter '" + e.name + "'; step aborted");
      }
    }
  }
  for (std::size_t p = 0; p < entries.size(); ++p) {
    Tensor& t = entries[p].tensor;
    auto values = t.mutable_values();
    const auto grad = t.grad();
    auto& v = opt.mean_square[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      v[i] = decay * v[i] + (1.0 - decay) * g * g;
      values[i] -= lr * g / (std::sqrt(v[i]) + eps);
    }
    t.zero_grad();
  }
}

double gradient_norm(const ModelParams& params) {
  double sq = 0.0;
  for (const NamedTensor& e : params.entries()) {
    for (double g : e.tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_gradients(ModelParams& params, double cap) {
  const double norm = gradient_norm(params);
  if (norm > cap && std::isfinite(norm)) {
    const double factor = cap / norm;
    for (NamedTensor& e : params.entries()) {
      for (double& g : e.tensor.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

std::vector<Window> training_windows(std::span<const TrainingScene> scenes, const TrainConfig& cfg) {
  std::vector<Window> all;
  for (const TrainingScene& s : scenes) {
    auto w = make_windows(*s.scene, cfg.stride, cfg.window);
    all.insert(all.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  if (cfg.subsample >= 1.0 || all.empty()) return all;
  std::mt19937_64 rng(cfg.seed ^ 0x5u);
  std::bernoulli_distribution keep(cfg.subsample);
  std::vector<Window> kept;
  for (Window& w : all) {
    if (keep(rng)) kept.push_back(std::move(w));
  }
  if (kept.empty()) kept.push_back(std::move(all.front()));
  return kept;
}

std::size_t scene_index_of(std::span<const TrainingScene> scenes, const Window& w) {
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    if (scenes[i].scene == w.scene) return i;
  }
  throw Error("window does not belong to any training scene");
}

namespace {

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

}  // namespace

TrainResult train(std::span<const TrainingScene> scenes, ModelParams params, const TrainConfig& cfg,
                  const TrainHooks& hooks, std::optional<TrainingState> resume) {
  cfg.validate();
  const std::vector<Window> windows = training_windows(scenes, cfg);
  if (windows.empty() && cfg.epochs > 0) {
    throw DataError("no training windows: scenes contain no pedestrian visible for " +
                    std::to_string(cfg.window.total_len) + " consecutive frames");
  }
  std::vector<std::size_t> window_scene(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) window_scene[i] = scene_index_of(scenes, windows[i]);

  TrainResult result;
  OptState opt = OptState::for_params(params);
  std::mt19937_64 shuffle_rng(cfg.seed);
  TrainingState state;
  if (resume) {
    state = *resume;
    if (state.mean_square.size() != opt.mean_square.size()) {
      throw ConfigError("resume state does not match the model parameters");
    }
    for (std::size_t p = 0; p < opt.mean_square.size(); ++p) {
      if (state.mean_square[p].size() != opt.mean_square[p].size()) {
        throw ConfigError("resume state does not match the model parameters");
      }
    }
    opt.mean_square = state.mean_square;
    std::istringstream is(state.shuffle_rng);
    is >> shuffle_rng;
    if (!is) throw ConfigError("resume state carries an unreadable RNG state");
  }
  params.zero_grad();

  const ForwardOptions fwd{RolloutMode::TeacherForcing, cfg.predict_partial, cfg.loss_mean};
  std::vector<std::size_t> order(windows.size());
  bool stop = cfg.max_steps > 0 && state.steps_done >= cfg.max_steps;

  for (std::size_t epoch = state.epochs_done; epoch < cfg.epochs && !stop; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t epoch_used = 0, epoch_skipped = 0, epoch_seen = 0;

    for (std::size_t b = 0; b < order.size() && !stop; b += cfg.batch) {
      const std::size_t b_end = std::min(order.size(), b + cfg.batch);
      const double weight = 1.0 / static_cast<double>(b_end - b);
      double batch_loss = 0.0;
      std::size_t used = 0, skipped = 0;
      for (std::size_t k = b; k < b_end; ++k) {
        const Window& w = windows[order[k]];
        ++epoch_seen;
        Tape tape;
        Tape::Recording recording(tape);
        try {
          const WindowOutput out = forward_window(w, scenes[window_scene[order[k]]].context, params, fwd);
          if (!out.loss.defined()) continue;
          tape.backward(weight == 1.0 ? out.loss : scale(out.loss, weight));
          batch_loss += out.loss.item();
          ++used;
        } catch (const NumericError& e) {
          ++skipped;
          log_warn(std::string("skipping window: ") + e.what());
        }
      }
      double norm = 0.0;
      if (used > 0) {
        norm = cfg.clip ? clip_gradients(params, cfg.grad_clip) : gradient_norm(params);
        try {
          rmsprop_step(params, opt, cfg.learning_rate, cfg.decay, cfg.eps);
        } catch (const NumericError& e) {
          log_warn(e.what());
          params.zero_grad();
          skipped += used;
          used = 0;
        }
      }
      epoch_skipped += skipped;
      epoch_loss += batch_loss;
      epoch_used += used;
      ++state.steps_done;
      StepRecord rec{epoch + 1, state.steps_done, used > 0 ? batch_loss / static_cast<double>(used) : 0.0,
                     norm, skipped};
      result.log.steps.push_back(rec);
      if (hooks.on_step) hooks.on_step(rec);
      if (cfg.max_steps > 0 && state.steps_done >= cfg.max_steps) stop = true;
    }

    result.log.skipped += epoch_skipped;
    result.log.epoch_mean_loss.push_back(epoch_used > 0 ? epoch_loss / static_cast<double>(epoch_used) : 0.0);
    if (static_cast<double>(epoch_skipped) > cfg.max_skip_fraction * static_cast<double>(epoch_seen)) {
      throw NumericError("epoch " + std::to_string(epoch + 1) + ": " + std::to_string(epoch_skipped) +
                         " of " + std::to_string(epoch_seen) +
                         " windows had non-finite losses; aborting training");
    }
    if (!stop) state.epochs_done = epoch + 1;
    state.shuffle_rng = rng_to_string(shuffle_rng);
    state.mean_square = opt.mean_square;
    if (hooks.on_epoch) hooks.on_epoch(epoch + 1, params, state);
  }
  state.shuffle_rng = rng_to_string(shuffle_rng);
  state.mean_square = opt.mean_square;
  result.params = std::move(params);
  result.state = std::move(state);
  return result;
}

void append_training_log(const std::filesystem::path& path, std::span<const StepRecord> rows) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot append to " + path.string());
  if (fresh) out << "epoch,step,loss,grad_norm,skipped\n";
  out.precision(17);
  for (const StepRecord& r : rows) {
    out << r.epoch << ',' << r.step << ',' << r.loss << ',' << r.grad_norm << ',' << r.skipped << '\n';
  }
}

}  // namespace sns
