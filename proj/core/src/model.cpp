#include "sns/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "sns/error.hpp"
#include "sns/pooling.hpp"

namespace sns {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

constexpr const char* kGates[] = {"f", "i", "o", "c"};

}  // namespace

Variant parse_variant(std::string_view name) {
  const std::string n = lower(name);
  if (n == "vanilla" || n == "vanilla-lstm") return Variant::Vanilla;
  if (n == "s" || n == "social" || n == "s-lstm" || n == "social-lstm") return Variant::Social;
  if (n == "sn" || n == "sn-lstm") return Variant::SocialNav;
  if (n == "ss" || n == "ss-lstm") return Variant::SocialSem;
  if (n == "sns" || n == "sns-lstm") return Variant::Full;
  throw ConfigError("unknown variant '" + std::string(name) + "' (vanilla|S|SN|SS|SNS)");
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Vanilla: return "vanilla";
    case Variant::Social: return "S";
    case Variant::SocialNav: return "SN";
    case Variant::SocialSem: return "SS";
    case Variant::Full: return "SNS";
  }
  return "?";
}

std::string_view display_name(Variant v) {
  switch (v) {
    case Variant::Vanilla: return "Vanilla LSTM";
    case Variant::Social: return "Social-LSTM";
    case Variant::SocialNav: return "SN-LSTM";
    case Variant::SocialSem: return "SS-LSTM";
    case Variant::Full: return "SNS-LSTM";
  }
  return "?";
}

SigmaSquash parse_sigma_squash(std::string_view name) {
  if (name == "exp") return SigmaSquash::Exp;
  if (name == "softplus") return SigmaSquash::Softplus;
  throw ConfigError("unknown sigma squashing '" + std::string(name) + "' (exp|softplus)");
}

Coords parse_coords(std::string_view name) {
  if (name == "absolute") return Coords::Absolute;
  if (name == "offset") return Coords::Offset;
  throw ConfigError("unknown coordinate mode '" + std::string(name) + "' (absolute|offset)");
}

std::string_view to_string(Coords c) { return c == Coords::Absolute ? "absolute" : "offset"; }

std::string_view to_string(SigmaSquash s) { return s == SigmaSquash::Exp ? "exp" : "softplus"; }

void ModelConfig::validate() const {
  if (hidden == 0 || embed == 0) throw ConfigError("hidden and embedding sizes must be positive");
  if (social_grid == 0 || nav_grid == 0 || sem_grid == 0) {
    throw ConfigError("pooling grid sizes must be positive");
  }
  if (!(social_cell > 0.0) || !(map_cell > 0.0)) throw ConfigError("cell sizes must be positive");
}

std::size_t ModelConfig::pooled_width() const {
  std::size_t w = 0;
  if (uses_social(variant)) w += embed;
  if (uses_navigation(variant)) w += embed;
  if (uses_semantic(variant)) w += embed;
  return w;
}

// ---- parameters -------------------------------------------------------

namespace {

struct ParamSpec {
  std::string name;
  Shape shape;
  std::size_t fan_in;
  double fill = 0.0;  // biases
  bool is_bias = false;
};

std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
  const std::size_t D = cfg.hidden, E = cfg.embed;
  std::vector<ParamSpec> specs;
  auto weight = [&](std::string name, std::size_t in, std::size_t out) {
    specs.push_back({std::move(name), {in, out}, in});
  };
  auto bias = [&](std::string name, std::size_t n, double fill) {
    specs.push_back({std::move(name), {n}, 0, fill, true});
  };
  weight("W_e", 2, E);
  if (cfg.biases) bias("b_e", E, 0.0);
  if (uses_social(cfg.variant)) {
    weight("W_a", cfg.social_grid * cfg.social_grid * D, E);
    if (cfg.biases) bias("b_a", E, 0.0);
  }
  if (uses_navigation(cfg.variant)) {
    weight("W_n", cfg.nav_grid * cfg.nav_grid, E);
    if (cfg.biases) bias("b_n", E, 0.0);
  }
  if (uses_semantic(cfg.variant)) {
    weight("W_s", cfg.sem_grid * cfg.sem_grid * kSemanticClassCount, E);
    if (cfg.biases) bias("b_s", E, 0.0);
  }
  if (cfg.variant != Variant::Vanilla) {
    weight("W_g", cfg.pooled_width(), E);
    if (cfg.biases) bias("b_g", E, 0.0);
  }
  const std::size_t in = cfg.lstm_input();
  for (const char* g : kGates) {
    weight(std::string("lstm.W_") + g, in, D);
    weight(std::string("lstm.U_") + g, D, D);
    bias(std::string("lstm.b_") + g, D, std::string(g) == "f" ? 1.0 : 0.0);
  }
  weight("W_l", D, 5);
  if (cfg.biases) bias("b_l", 5, 0.0);
  return specs;
}

}  // namespace

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config_ = config;
  std::mt19937_64 rng(seed);
  for (const ParamSpec& s : param_specs(config)) {
    std::vector<double> values(shape_numel(s.shape), s.fill);
    if (!s.is_bias) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(s.fan_in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : values) v = dist(rng);
    }
    p.entries_.push_back({s.name, Tensor::parameter(s.shape, std::move(values))});
  }
  return p;
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config_ = config;
  for (const ParamSpec& s : param_specs(config)) {
    p.entries_.push_back(
        {s.name, Tensor::parameter(s.shape, std::vector<double>(shape_numel(s.shape), 0.0))});
  }
  return p;
}

bool ModelParams::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const NamedTensor& e) { return e.name == name; });
}

const Tensor& ModelParams::get(std::string_view name) const {
  for (const NamedTensor& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw ConfigError("model has no parameter '" + std::string(name) + "' (variant " +
                    std::string(to_string(config_.variant)) + ")");
}

Tensor& ModelParams::get(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).get(name));
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const NamedTensor& e : entries_) n += e.tensor.size();
  return n;
}

void ModelParams::zero_grad() {
  for (NamedTensor& e : entries_) e.tensor.zero_grad();
}

ModelParams ModelParams::clone() const {
  ModelParams p;
  p.config_ = config_;
  for (const NamedTensor& e : entries_) {
    const auto v = e.tensor.values();
    p.entries_.push_back(
        {e.name, Tensor::parameter(e.tensor.shape(), std::vector<double>(v.begin(), v.end()))});
  }
  return p;
}

// ---- LSTM -------------------------------------------------------------

LstmState LstmState::zeros(std::size_t rows, std::size_t hidden) {
  return {Tensor::zeros({rows, hidden}), Tensor::zeros({rows, hidden})};
}

namespace {

Tensor gate_preactivation(const ModelParams& p, const char* gate, const Tensor& x,
                          const Tensor& h) {
  const std::string g(gate);
  return add_bias(add(matmul(x, p.get("lstm.W_" + g)), matmul(h, p.get("lstm.U_" + g))),
                  p.get("lstm.b_" + g));
}

Tensor dense(const ModelParams& p, const Tensor& x, const char* weight, const char* bias) {
  Tensor y = matmul(x, p.get(weight));
  if (p.config().biases) y = add_bias(y, p.get(bias));
  return y;
}

}  // namespace

LstmState lstm_step(const ModelParams& params, const LstmState& state, const Tensor& input) {
  const ModelConfig& cfg = params.config();
  if (input.rank() != 2 || input.dim(1) != cfg.lstm_input()) {
    throw DimensionError("lstm_step: input " + shape_to_string(input.shape()) + " but variant " +
                         std::string(to_string(cfg.variant)) + " expects width " +
                         std::to_string(cfg.lstm_input()));
  }
  const Shape expected{input.dim(0), cfg.hidden};
  if (state.h.shape() != expected || state.c.shape() != expected) {
    throw DimensionError("lstm_step: state " + shape_to_string(state.h.shape()) + "/" +
                         shape_to_string(state.c.shape()) + " but expected " +
                         shape_to_string(expected));
  }
  const Tensor f = sigmoid(gate_preactivation(params, "f", input, state.h));
  const Tensor i = sigmoid(gate_preactivation(params, "i", input, state.h));
  const Tensor o = sigmoid(gate_preactivation(params, "o", input, state.h));
  const Tensor candidate = tanh(gate_preactivation(params, "c", input, state.h));
  const Tensor c = add(mul(f, state.c), mul(i, candidate));
  const Tensor h = mul(o, tanh(c));
  return {h, c};
}

Tensor embed_inputs(const ModelParams& params, const Tensor& positions,
                    const PoolingInputs& pooled) {
  const ModelConfig& cfg = params.config();
  const Variant v = cfg.variant;
  if (positions.rank() != 2 || positions.dim(1) != 2) {
    throw DimensionError("embed_inputs: positions must be [P x 2], got " +
                         shape_to_string(positions.shape()));
  }
  auto check = [&](const Tensor& t, bool wanted, const char* what) {
    if (t.defined() != wanted) {
      throw ConfigError(std::string("embed_inputs: variant ") + std::string(to_string(v)) +
                        (wanted ? " requires a " : " does not take a ") + what + " tensor");
    }
    if (wanted && (t.rank() != 2 || t.dim(0) != positions.dim(0))) {
      throw DimensionError(std::string("embed_inputs: ") + what + " tensor has shape " +
                           shape_to_string(t.shape()));
    }
  };
  check(pooled.social, uses_social(v), "social");
  check(pooled.navigation, uses_navigation(v), "navigation");
  check(pooled.semantic, uses_semantic(v), "semantic");

  const Tensor e = relu(dense(params, positions, "W_e", "b_e"));
  if (v == Variant::Vanilla) return e;

  std::vector<Tensor> parts;
  if (uses_social(v)) parts.push_back(relu(dense(params, pooled.social, "W_a", "b_a")));
  if (uses_navigation(v)) parts.push_back(relu(dense(params, pooled.navigation, "W_n", "b_n")));
  if (uses_semantic(v)) parts.push_back(relu(dense(params, pooled.semantic, "W_s", "b_s")));
  const Tensor joined = parts.size() == 1 ? parts.front() : concat(parts, 1);
  const Tensor g = relu(dense(params, joined, "W_g", "b_g"));
  return concat({e, g}, 1);
}

// ---- output head and loss ---------------------------------------------

namespace {

double softplus_value(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

const double kLog2Pi = std::log(2.0 * std::numbers::pi);
const double kLog4 = std::log(4.0);

}  // namespace

GaussianParams GaussianHead::params(std::size_t row) const {
  const auto v = raw.values().subspan(row * 5, 5);
  GaussianParams g;
  g.mu = {v[0], v[1]};
  if (squash == SigmaSquash::Exp) {
    g.sigma = {std::exp(v[2]), std::exp(v[3])};
  } else {
    g.sigma = {softplus_value(v[2]), softplus_value(v[3])};
  }
  g.rho = std::tanh(v[4]);
  return g;
}

GaussianHead output_head(const ModelParams& params, const Tensor& h) {
  if (h.rank() != 2 || h.dim(1) != params.config().hidden) {
    throw DimensionError("output_head: hidden state " + shape_to_string(h.shape()));
  }
  return {dense(params, h, "W_l", "b_l"), params.config().sigma};
}

Tensor gaussian_nll(const GaussianHead& head, std::span<const std::size_t> rows,
                    std::span<const Vec2> truths) {
  if (rows.size() != truths.size() || rows.empty()) {
    throw DimensionError("gaussian_nll: need one truth per selected row");
  }
  const std::size_t k = rows.size();
  const Tensor g = gather_rows(head.raw, rows);
  const Tensor mu_x = slice(g, 1, 0, 1);
  const Tensor mu_y = slice(g, 1, 1, 2);
  Tensor log_sx = slice(g, 1, 2, 3);
  Tensor log_sy = slice(g, 1, 3, 4);
  if (head.squash == SigmaSquash::Softplus) {
    log_sx = log(softplus(log_sx));
    log_sy = log(softplus(log_sy));
  }
  const Tensor r = slice(g, 1, 4, 5);
  const Tensor rho = tanh(r);

  std::vector<double> tx(k), ty(k);
  for (std::size_t i = 0; i < k; ++i) {
    tx[i] = truths[i].x;
    ty[i] = truths[i].y;
  }
  const Tensor nx = mul(sub(Tensor::from({k, 1}, tx), mu_x), exp(scale(log_sx, -1.0)));
  const Tensor ny = mul(sub(Tensor::from({k, 1}, ty), mu_y), exp(scale(log_sy, -1.0)));
  const Tensor q = sub(add(square(nx), square(ny)), scale(mul(rho, mul(nx, ny)), 2.0));
  // log(1 - tanh(r)^2) = log 4 - 2r - 2 softplus(-2r)
  const Tensor minus_2r = scale(r, -2.0);
  const Tensor log_one_minus_rho2 = add_scalar(sub(minus_2r, scale(softplus(minus_2r), 2.0)), kLog4);
  const Tensor terms =
      add(add_scalar(add(log_sx, log_sy), kLog2Pi),
          add(scale(log_one_minus_rho2, 0.5),
              scale(mul(q, exp(scale(log_one_minus_rho2, -1.0))), 0.5)));
  return sum(terms);
}

double bivariate_nll(const GaussianParams& g, Vec2 truth) {
  if (!(g.sigma.x > 0.0) || !(g.sigma.y > 0.0) || !(std::abs(g.rho) < 1.0)) {
    throw DomainError("bivariate_nll: sigma must be > 0 and |rho| < 1");
  }
  const double nx = (truth.x - g.mu.x) / g.sigma.x;
  const double ny = (truth.y - g.mu.y) / g.sigma.y;
  const double one_minus = 1.0 - g.rho * g.rho;
  const double q = nx * nx + ny * ny - 2.0 * g.rho * nx * ny;
  return kLog2Pi + std::log(g.sigma.x) + std::log(g.sigma.y) + 0.5 * std::log(one_minus) +
         q / (2.0 * one_minus);
}

double nll_loss(std::span<const GaussianParams> gaussians, std::span<const Vec2> truths) {
  if (gaussians.size() != truths.size()) throw DimensionError("nll_loss: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    const double term = bivariate_nll(gaussians[i], truths[i]);
    if (!std::isfinite(term)) throw NumericError("nll_loss: non-finite term " + std::to_string(i));
    total += term;
  }
  return total;
}

Vec2 sample_position(const GaussianParams& g, std::mt19937_64& rng, SampleMode mode) {
  if (mode == SampleMode::Mean) return g.mu;
  std::normal_distribution<double> normal(0.0, 1.0);
  const double z1 = normal(rng);
  const double z2 = normal(rng);
  // lower Cholesky factor of [[sx^2, r sx sy], [r sx sy, sy^2]]
  return {g.mu.x + g.sigma.x * z1,
          g.mu.y + g.sigma.y * (g.rho * z1 + std::sqrt(1.0 - g.rho * g.rho) * z2)};
}

// ---- window forward pass ----------------------------------------------

WindowOutput forward_window(const Window& window, const SceneContext& context,
                            const ModelParams& params, const ForwardOptions& options,
                            std::mt19937_64* rng) {
  if (window.scene == nullptr) throw Error("forward_window: window has no scene");
  if (window.targets.empty()) throw DataError("forward_window: window has no target pedestrians");
  const ModelConfig& cfg = params.config();
  const Scene& scene = *window.scene;
  const std::size_t obs = window.spec.obs_len;
  const std::size_t total = window.spec.total_len;
  if (uses_navigation(cfg.variant) && context.navigation == nullptr) {
    throw ConfigError("variant " + std::string(to_string(cfg.variant)) + " needs a navigation map");
  }
  if (uses_semantic(cfg.variant) && context.semantic == nullptr) {
    throw ConfigError("variant " + std::string(to_string(cfg.variant)) + " needs a semantic map");
  }
  if (options.mode == RolloutMode::Sample && rng == nullptr) {
    throw ConfigError("sampled rollout needs a random generator");
  }

  WindowOutput out;
  out.tracks = window.targets;
  out.tracks.insert(out.tracks.end(), window.context.begin(), window.context.end());
  const std::size_t n_targets = window.targets.size();
  const std::size_t n_all = out.tracks.size();
  out.gaussians.assign(n_all, std::vector<std::optional<GaussianParams>>(total));
  const bool rollout = options.mode != RolloutMode::TeacherForcing;
  if (rollout) out.predicted.assign(n_targets, std::vector<Vec2>(total - obs));

  auto present = [&](std::size_t k, std::size_t f) {
    return k < n_targets || scene.tracks[out.tracks[k]].present(window.start + f);
  };
  auto truth = [&](std::size_t k, std::size_t f) {
    return scene.tracks[out.tracks[k]].at(window.start + f);
  };
  auto position = [&](std::size_t k, std::size_t f) {
    if (rollout && k < n_targets && f >= obs) return out.predicted[k][f - obs];
    return truth(k, f);
  };

  const bool offset_mode = cfg.coords == Coords::Offset;
  Tensor h_all = Tensor::zeros({n_all, cfg.hidden});
  Tensor c_all = Tensor::zeros({n_all, cfg.hidden});
  Tensor loss;

  for (std::size_t f = 0; f + 1 < total; ++f) {
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < n_all; ++k) {
      if (present(k, f)) active.push_back(k);
    }
    std::vector<Vec2> world(active.size());
    std::vector<double> centred(active.size() * 2);
    // Reference point of the emitted mu, in world coordinates.
    std::vector<Vec2> origin(active.size(), context.offset);
    for (std::size_t a = 0; a < active.size(); ++a) {
      const std::size_t k = active[a];
      world[a] = position(k, f);
      Vec2 ref = context.offset;
      if (offset_mode) {
        origin[a] = world[a];
        ref = f > 0 && present(k, f - 1) ? position(k, f - 1) : world[a];
      }
      centred[2 * a] = world[a].x - ref.x;
      centred[2 * a + 1] = world[a].y - ref.y;
    }

    const Tensor h_prev = gather_rows(h_all, active);
    const Tensor c_prev = gather_rows(c_all, active);
    PoolingInputs pooled;
    if (uses_social(cfg.variant)) {
      pooled.social = social_tensors(world, h_prev, cfg.social_grid, cfg.social_cell);
    }
    if (uses_navigation(cfg.variant)) {
      pooled.navigation = navigation_tensors(world, *context.navigation, cfg.nav_grid, cfg.nav_scale);
    }
    if (uses_semantic(cfg.variant)) {
      pooled.semantic = semantic_tensors(world, *context.semantic, cfg.sem_grid, cfg.map_cell);
    }
    const Tensor input =
        embed_inputs(params, Tensor::from({active.size(), 2}, std::move(centred)), pooled);
    const LstmState next = lstm_step(params, {h_prev, c_prev}, input);
    h_all = scatter_rows(h_all, active, next.h);
    c_all = scatter_rows(c_all, active, next.c);

    const GaussianHead head = output_head(params, next.h);
    const std::size_t emit = f + 1;
    std::vector<std::size_t> loss_rows;
    std::vector<Vec2> loss_truths;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const std::size_t k = active[a];
      GaussianParams g = head.params(a);
      g.mu = {g.mu.x + origin[a].x, g.mu.y + origin[a].y};
      out.gaussians[k][emit] = g;
      if (emit < obs) continue;
      const bool scored = k < n_targets || (options.predict_partial && present(k, emit));
      if (scored && !rollout) {
        const Vec2 t = truth(k, emit);
        loss_rows.push_back(a);
        loss_truths.push_back({t.x - origin[a].x, t.y - origin[a].y});
      }
      if (rollout && k < n_targets) {
        const SampleMode mode =
            options.mode == RolloutMode::Mean ? SampleMode::Mean : SampleMode::Sample;
        out.predicted[k][emit - obs] =
            mode == SampleMode::Mean ? g.mu : sample_position(g, *rng, SampleMode::Sample);
      }
    }
    if (!loss_rows.empty()) {
      Tensor step_loss;
      try {
        step_loss = gaussian_nll(head, loss_rows, loss_truths);
      } catch (const NumericError& e) {
        std::string peds;
        for (std::size_t a : loss_rows) {
          peds += (peds.empty() ? "" : ",") + std::to_string(scene.tracks[out.tracks[active[a]]].ped_id);
        }
        throw NumericError("non-finite loss term at frame " +
                           std::to_string(scene.frame_ids[window.start + emit]) +
                           " for pedestrians {" + peds + "}: " + e.what());
      }
      loss = loss.defined() ? add(loss, step_loss) : step_loss;
      out.terms += loss_rows.size();
    }
  }
  if (loss.defined() && options.loss_mean) loss = scale(loss, 1.0 / static_cast<double>(out.terms));
  out.loss = loss;
  return out;
}

}  // namespace sns
