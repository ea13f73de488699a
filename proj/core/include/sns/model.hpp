#pragma once

// Per-pedestrian LSTM with social / navigation / semantic pooling and a
// bivariate Gaussian output head.
//
// All pedestrians of a window are processed jointly: every tensor below is
// row-stacked, one row per active pedestrian.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sns/dataset.hpp"
#include "sns/scene_maps.hpp"
#include "sns/tensor.hpp"

namespace sns {

enum class Variant { Vanilla, Social, SocialNav, SocialSem, Full };

Variant parse_variant(std::string_view name);
// Short tag: vanilla, S, SN, SS, SNS.
std::string_view to_string(Variant v);
// Table heading: "Vanilla LSTM", "Social-LSTM", ...
std::string_view display_name(Variant v);
inline constexpr Variant kAllVariants[] = {Variant::Vanilla, Variant::Social, Variant::SocialNav,
                                           Variant::SocialSem, Variant::Full};

inline bool uses_social(Variant v) { return v != Variant::Vanilla; }
inline bool uses_navigation(Variant v) { return v == Variant::SocialNav || v == Variant::Full; }
inline bool uses_semantic(Variant v) { return v == Variant::SocialSem || v == Variant::Full; }

enum class SigmaSquash { Exp, Softplus };
SigmaSquash parse_sigma_squash(std::string_view name);
std::string_view to_string(SigmaSquash s);

// Absolute: the embedded input is the (centred) position and mu is a
// position. Offset: the input is the displacement since the previous frame
// and mu is relative to the current position.
enum class Coords { Absolute, Offset };
Coords parse_coords(std::string_view name);
std::string_view to_string(Coords c);

struct ModelConfig {
  Variant variant = Variant::Full;
  std::size_t hidden = 128;  // D
  std::size_t embed = 64;
  std::size_t social_grid = 8;  // N_o
  double social_cell = 0.5;     // meters
  std::size_t nav_grid = 32;    // N_n
  std::size_t sem_grid = 20;    // N_s
  double map_cell = 0.1;        // semantic pooling cell, meters
  NavScale nav_scale = NavScale::Log1p;
  SigmaSquash sigma = SigmaSquash::Exp;
  bool biases = false;
  bool normalize = true;  // subtract the scene centroid from embedded positions
  Coords coords = Coords::Offset;

  void validate() const;
  std::size_t lstm_input() const { return variant == Variant::Vanilla ? embed : 2 * embed; }
  std::size_t pooled_width() const;  // width of concat(a, n, s)
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

class ModelParams {
 public:
  ModelParams() = default;
  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); forget-gate bias 1, other biases 0.
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);
  // Zero-filled parameters with the right shapes (for loading).
  static ModelParams zeros(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  Tensor& get(std::string_view name);
  std::vector<NamedTensor>& entries() { return entries_; }
  const std::vector<NamedTensor>& entries() const { return entries_; }
  std::size_t parameter_count() const;
  void zero_grad();
  ModelParams clone() const;

 private:
  ModelConfig config_;
  std::vector<NamedTensor> entries_;
};

// ---- building blocks --------------------------------------------------

struct LstmState {
  Tensor h;  // [P x D]
  Tensor c;  // [P x D]

  static LstmState zeros(std::size_t rows, std::size_t hidden);
};

LstmState lstm_step(const ModelParams& params, const LstmState& state, const Tensor& input);

struct PoolingInputs {
  Tensor social;      // [P x N_o^2 D]
  Tensor navigation;  // [P x N_n^2]
  Tensor semantic;    // [P x N_s^2 L]
};

// positions: [P x 2]. Returns concat(e, g) ([P x 2E]), or e alone for vanilla.
Tensor embed_inputs(const ModelParams& params, const Tensor& positions,
                    const PoolingInputs& pooled);

struct GaussianParams {
  Vec2 mu;
  Vec2 sigma;
  double rho = 0.0;
};

// Raw 5-vectors [P x 5] = (mu_x, mu_y, s_x, s_y, r); sigma = squash(s), rho = tanh(r).
struct GaussianHead {
  Tensor raw;
  SigmaSquash squash = SigmaSquash::Exp;

  std::size_t rows() const { return raw.dim(0); }
  GaussianParams params(std::size_t row) const;
};

GaussianHead output_head(const ModelParams& params, const Tensor& h);

// Negative log bivariate normal density summed over the selected rows,
// computed from log-sigma terms (the density itself is never formed).
Tensor gaussian_nll(const GaussianHead& head, std::span<const std::size_t> rows,
                    std::span<const Vec2> truths);
// Value-only version of one term.
double bivariate_nll(const GaussianParams& g, Vec2 truth);
double nll_loss(std::span<const GaussianParams> gaussians, std::span<const Vec2> truths);

enum class SampleMode { Mean, Sample };
Vec2 sample_position(const GaussianParams& g, std::mt19937_64& rng, SampleMode mode);

// ---- window forward pass ----------------------------------------------

struct SceneContext {
  const NavigationMap* navigation = nullptr;
  const SemanticMap* semantic = nullptr;
  Vec2 offset;  // subtracted from positions before the position embedding
};

enum class RolloutMode { TeacherForcing, Mean, Sample };

struct ForwardOptions {
  RolloutMode mode = RolloutMode::TeacherForcing;
  // Context pedestrians also contribute loss terms where they are visible.
  bool predict_partial = false;
  bool loss_mean = false;
};

struct WindowOutput {
  Tensor loss;  // undefined when there are no loss terms
  std::size_t terms = 0;
  std::vector<std::size_t> tracks;  // window.targets followed by window.context
  // gaussians[k][f]: distribution emitted for frame f of track k.
  std::vector<std::vector<std::optional<GaussianParams>>> gaussians;
  // predicted[k]: world positions for frames obs_len .. total_len-1 of target k
  // (empty under teacher forcing).
  std::vector<std::vector<Vec2>> predicted;
};

// Steps every pedestrian of the window jointly through frames
// 0 .. total_len-2. At frame f the pooling tensors are built from
// positions at f and hidden states from f-1; the state after the step
// emits the Gaussian for frame f+1. Targets use ground truth up to the last
// observed frame, then their own predictions unless teacher forcing.
WindowOutput forward_window(const Window& window, const SceneContext& context,
                            const ModelParams& params, const ForwardOptions& options,
                            std::mt19937_64* rng = nullptr);

}  // namespace sns
