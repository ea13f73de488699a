#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sns/model.hpp"

namespace sns {

// Optimizer and data-order state needed to resume training bit-exactly.
struct TrainingState {
  std::size_t epochs_done = 0;
  std::size_t steps_done = 0;
  std::string shuffle_rng;  // textual std::mt19937_64 state
  std::vector<std::vector<double>> mean_square;  // RMSprop accumulators, parameter order
};

struct Checkpoint {
  ModelParams params;
  std::optional<TrainingState> training;
  std::string run_config;  // opaque JSON echoed by the writer
};

// File layout: a magic line, one JSON header line (format version, model
// configuration, block names and shapes, run configuration), then the raw
// little-endian float64 payload of every block in header order.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const TrainingState* training = nullptr, const std::string& run_config = "{}");
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace sns
