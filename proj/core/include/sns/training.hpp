#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sns/checkpoint.hpp"
#include "sns/dataset.hpp"
#include "sns/model.hpp"

namespace sns {

struct TrainConfig {
  double learning_rate = 0.003;
  double decay = 0.95;  // RMSprop running-average decay
  double eps = 1e-8;
  std::size_t epochs = 50;
  bool clip = true;
  double grad_clip = 10.0;  // global L2 norm cap
  std::uint64_t seed = 1;
  std::size_t batch = 1;  // windows per optimizer step, losses averaged
  bool loss_mean = false;
  bool predict_partial = false;
  double subsample = 1.0;  // fraction of windows kept (seeded)
  std::size_t stride = 1;
  WindowSpec window;
  std::size_t max_steps = 0;  // 0 = no limit
  double max_skip_fraction = 0.01;

  void validate() const;
};

struct OptState {
  std::vector<std::vector<double>> mean_square;

  static OptState for_params(const ModelParams& params);
};

// v <- decay v + (1 - decay) g^2;  theta <- theta - lr g / (sqrt(v) + eps).
// Gradients are zeroed afterwards. A non-finite gradient aborts the step
// (nothing is modified) with an error naming the parameter.
void rmsprop_step(ModelParams& params, OptState& opt, double lr, double decay, double eps = 1e-8);

double gradient_norm(const ModelParams& params);
// Scales gradients by min(1, cap / ||g||); returns the pre-clip norm.
double clip_gradients(ModelParams& params, double cap);

struct TrainingScene {
  const Scene* scene = nullptr;
  SceneContext context;
};

// Windows of all scenes, in scene order, after seeded subsampling.
std::vector<Window> training_windows(std::span<const TrainingScene> scenes, const TrainConfig& cfg);
// Index of the TrainingScene each window belongs to.
std::size_t scene_index_of(std::span<const TrainingScene> scenes, const Window& w);

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::size_t skipped = 0;
};

struct TrainingLog {
  std::vector<StepRecord> steps;
  std::vector<double> epoch_mean_loss;
  std::size_t skipped = 0;
};

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(std::size_t epoch, const ModelParams&, const TrainingState&)> on_epoch;
};

struct TrainResult {
  ModelParams params;
  TrainingLog log;
  TrainingState state;
};

// Teacher-forced NLL minimisation with RMSprop over shuffled windows.
// `resume` continues a run from a saved TrainingState.
TrainResult train(std::span<const TrainingScene> scenes, ModelParams params, const TrainConfig& cfg,
                  const TrainHooks& hooks = {}, std::optional<TrainingState> resume = std::nullopt);

// Appends "epoch,step,loss,grad_norm,skipped" rows (header written when the file is new).
void append_training_log(const std::filesystem::path& path, std::span<const StepRecord> rows);

}  // namespace sns
