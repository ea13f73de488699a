#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sns/dataset.hpp"
#include "sns/model.hpp"
#include "sns/scene_maps.hpp"

namespace sns {

using Trajectory = std::vector<Vec2>;

// Mean Euclidean distance over every aligned (pedestrian, step) pair.
// `steps_per_ped` overrides the per-pedestrian denominator (0 = actual
// number of predicted steps).
double ade(std::span<const Trajectory> predicted, std::span<const Trajectory> truth,
           std::size_t steps_per_ped = 0);
// Mean Euclidean distance at the final step.
double fde(std::span<const Trajectory> predicted, std::span<const Trajectory> truth);

// Produces future positions for the targets of a window.
class Predictor {
 public:
  virtual ~Predictor() = default;
  // result[s][k]: sample s, target k, positions for frames obs_len .. total_len-1.
  virtual std::vector<std::vector<Trajectory>> predict(const Window& window,
                                                       const SceneContext& context) = 0;
  virtual bool needs_navigation() const { return false; }
  virtual std::string name() const = 0;
};

// Autoregressive LSTM rollout; mean mode unless `samples` > 0.
class ModelPredictor : public Predictor {
 public:
  ModelPredictor(const ModelParams& params, std::size_t samples = 0, std::uint64_t seed = 1);
  std::vector<std::vector<Trajectory>> predict(const Window& window,
                                               const SceneContext& context) override;
  bool needs_navigation() const override;
  std::string name() const override;

 private:
  const ModelParams& params_;
  std::size_t samples_;
  std::uint64_t seed_;
};

// Returns the ground truth; metrics must be exactly zero.
class OraclePredictor : public Predictor {
 public:
  std::vector<std::vector<Trajectory>> predict(const Window& window, const SceneContext&) override;
  std::string name() const override { return "oracle"; }
};

// Repeats the last observed position.
class PersistencePredictor : public Predictor {
 public:
  std::vector<std::vector<Trajectory>> predict(const Window& window, const SceneContext&) override;
  std::string name() const override { return "persistence"; }
};

Trajectory future_truth(const Window& window, std::size_t target_index);
Trajectory observed_truth(const Window& window, std::size_t target_index);

enum class AdeDenominator { Predicted, Window };
AdeDenominator parse_ade_denominator(std::string_view name);

enum class NavMapSource {
  Online,     // held-out scene: accumulate observed frames up to each window's last observation
  FullScene,  // held-out scene: every annotation of the scene
  Provided,   // use SceneContext::navigation as given
};

struct EvalConfig {
  std::size_t stride = 1;
  WindowSpec window;
  double subsample = 1.0;
  std::uint64_t seed = 1;
  AdeDenominator ade_denominator = AdeDenominator::Predicted;
  NavMapSource navmap = NavMapSource::Online;
  GridTransform nav_grid;  // grid for Online / FullScene maps
  SmoothingKernel kernel = SmoothingKernel::uniform(3);
};

struct WindowMetrics {
  std::size_t start = 0;
  std::size_t targets = 0;
  double ade = 0.0;
  double fde = 0.0;
};

struct WindowPrediction {
  Window window;
  std::vector<Trajectory> predicted;  // first sample, per target
};

struct EvalResult {
  std::string scene;
  std::string variant;
  double ade = 0.0;
  double fde = 0.0;
  std::size_t pedestrians = 0;  // target instances over all windows
  std::size_t windows = 0;
  std::vector<WindowMetrics> per_window;
};

EvalResult evaluate(const Scene& test_scene, const SceneContext& context, Predictor& predictor,
                    const EvalConfig& cfg, std::vector<WindowPrediction>* predictions = nullptr);

// Windows evaluated for a scene under `cfg` (stride and seeded subsampling).
std::vector<Window> evaluation_windows(const Scene& scene, const EvalConfig& cfg);

// results.csv: scene,variant,ade,fde,n_windows,n_peds
void write_results_csv(const std::filesystem::path& path, std::span<const EvalResult> results);
std::vector<EvalResult> read_results_csv(const std::filesystem::path& path);

// Per-target polylines: window,track,ped_id,frame,kind,x,y with kind in
// {observed, truth, predicted}.
void write_predictions_csv(const std::filesystem::path& path, const Scene& scene,
                           std::span<const WindowPrediction> predictions);
// SVG overlay of one window: observed + ground truth solid, prediction dashed.
void write_window_svg(const std::filesystem::path& path, const Scene& scene,
                      const WindowPrediction& prediction);

}  // namespace sns
