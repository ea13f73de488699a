#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here is linked into the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <unistd.h>
#include <random>
#include <string>
#include <vector>

#include "sns/dataset.hpp"
#include "sns/evaluation.hpp"
#include "sns/model.hpp"
#include "sns/pooling.hpp"
#include "sns/scene_maps.hpp"
#include "sns/tensor.hpp"

namespace oracle {

// ---- finite differences -------------------------------------------------

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;  // "name[index]"
  std::size_t checked = 0;
};

// |a - n| / max(|a|, |n|, floor).
inline double rel_error(double analytic, double numeric, double floor = 1e-5) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Compares the tape gradient of `loss(params)` with central differences for
// every entry of every parameter.
inline GradCheck check_gradients(sns::ModelParams& params,
                                 const std::function<sns::Tensor(const sns::ModelParams&)>& loss,
                                 double eps = 1e-5) {
  params.zero_grad();
  {
    sns::Tape tape;
    sns::Tape::Recording rec(tape);
    tape.backward(loss(params));
  }
  GradCheck out;
  for (auto& e : params.entries()) {
    const std::vector<double> analytic(e.tensor.grad().begin(), e.tensor.grad().end());
    auto values = e.tensor.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = loss(params).item();
      values[i] = saved - eps;
      const double down = loss(params).item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = rel_error(analytic[i], numeric);
      ++out.checked;
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.worst = e.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  params.zero_grad();
  return out;
}

// Generic central-difference gradient of f at x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double eps = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f(x);
    x[i] = saved - eps;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

// ---- pooling --------------------------------------------------------------

// Social tensor by testing every neighbour against every cell's interval.
inline std::vector<double> social(std::size_t i, const std::vector<sns::Vec2>& pos,
                                  const std::vector<std::vector<double>>& hidden, std::size_t n,
                                  double cell) {
  const std::size_t d = hidden.empty() ? 0 : hidden[0].size();
  std::vector<double> out(n * n * d, 0.0);
  const double half = 0.5 * static_cast<double>(n) * cell;
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t j = 0; j < pos.size(); ++j) {
        if (j == i) continue;
        const double u = (pos[j].x - pos[i].x + half) / cell;
        const double v = (pos[j].y - pos[i].y + half) / cell;
        const bool in_x = u >= static_cast<double>(k) && u < static_cast<double>(k + 1);
        const bool in_y = v >= static_cast<double>(m) && v < static_cast<double>(m + 1);
        if (!in_x || !in_y) continue;
        for (std::size_t c = 0; c < d; ++c) out[(m * n + k) * d + c] += hidden[j][c];
      }
    }
  }
  return out;
}

// Map cell containing p found by scanning every cell.
inline bool find_cell(const sns::GridTransform& g, sns::Vec2 p, std::ptrdiff_t& row, std::ptrdiff_t& col) {
  const double u = (p.x - g.origin.x) / g.cell_size;
  const double v = (p.y - g.origin.y) / g.cell_size;
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      if (v >= static_cast<double>(r) && v < static_cast<double>(r + 1) && u >= static_cast<double>(c) &&
          u < static_cast<double>(c + 1)) {
        row = static_cast<std::ptrdiff_t>(r);
        col = static_cast<std::ptrdiff_t>(c);
        return true;
      }
    }
  }
  return false;
}

inline double scaled(double v, sns::NavScale s, double max_value) {
  switch (s) {
    case sns::NavScale::Raw: return v;
    case sns::NavScale::Log1p: return std::log1p(v);
    case sns::NavScale::MaxNorm: return max_value > 0.0 ? v / max_value : 0.0;
  }
  return v;
}

inline std::vector<double> navigation(sns::Vec2 p, const sns::NavigationMap& map, std::size_t n,
                                      sns::NavScale s) {
  std::vector<double> out(n * n, 0.0);
  std::ptrdiff_t row = 0, col = 0;
  if (!find_cell(map.transform, p, row, col)) return out;
  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::ptrdiff_t r = row - half + static_cast<std::ptrdiff_t>(m);
      const std::ptrdiff_t c = col - half + static_cast<std::ptrdiff_t>(k);
      if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(map.transform.rows) ||
          c >= static_cast<std::ptrdiff_t>(map.transform.cols)) {
        continue;
      }
      out[m * n + k] = scaled(map.values[static_cast<std::size_t>(r) * map.transform.cols +
                                         static_cast<std::size_t>(c)],
                              s, map.max_value);
    }
  }
  return out;
}

// Semantic tensor by classifying every raster pixel centre into pooling cells.
inline std::vector<double> semantic(sns::Vec2 p, const sns::SemanticMap& map, std::size_t n, double cell) {
  constexpr std::size_t L = sns::kSemanticClassCount;
  const auto& g = map.transform;
  std::vector<double> out(n * n * L, 0.0);
  const double cx = std::floor((p.x - g.origin.x) / cell);
  const double cy = std::floor((p.y - g.origin.y) / cell);
  const double half = static_cast<double>(n / 2);
  std::vector<std::vector<double>> counts(n * n, std::vector<double>(L, 0.0));
  std::vector<double> totals(n * n, 0.0);
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      const double px = (static_cast<double>(c) + 0.5) * g.cell_size / cell;
      const double py = (static_cast<double>(r) + 0.5) * g.cell_size / cell;
      const double k = std::floor(px) - (cx - half);
      const double m = std::floor(py) - (cy - half);
      if (k < 0 || m < 0 || k >= static_cast<double>(n) || m >= static_cast<double>(n)) continue;
      const auto idx = static_cast<std::size_t>(m) * n + static_cast<std::size_t>(k);
      counts[idx][map.at(r, c)] += 1.0;
      totals[idx] += 1.0;
    }
  }
  for (std::size_t idx = 0; idx < n * n; ++idx) {
    if (totals[idx] == 0.0) continue;
    for (std::size_t l = 0; l < L; ++l) out[idx * L + l] = counts[idx][l] / totals[idx];
  }
  return out;
}

// One seeded random scene (<= 10 pedestrians, random maps) checked against
// the brute-force tensors above. Returns the number of mismatching entries.
struct PoolingComparison {
  std::size_t social = 0, navigation = 0, semantic = 0, entries = 0;
};

inline PoolingComparison compare_pooling(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> n_peds(1, 10), n_grid(1, 6), n_d(1, 4), n_k(1, 3);
  std::uniform_real_distribution<double> pos(-3.0, 3.0), h(-1.0, 1.0), count(0.0, 5.0);
  PoolingComparison out;

  const std::size_t P = n_peds(rng), D = n_d(rng);
  std::vector<sns::Vec2> positions(P);
  for (auto& p : positions) p = {pos(rng), pos(rng)};
  std::vector<std::vector<double>> hidden(P, std::vector<double>(D));
  std::vector<double> flat;
  for (auto& row : hidden) {
    for (double& v : row) {
      v = h(rng);
      flat.push_back(v);
    }
  }

  const std::size_t No = n_grid(rng);
  const double cell = 0.25 * static_cast<double>(n_k(rng));
  const sns::Tensor social = sns::social_tensors(positions, sns::Tensor::from({P, D}, flat), No, cell);
  for (std::size_t i = 0; i < P; ++i) {
    const auto want = oracle::social(i, positions, hidden, No, cell);
    for (std::size_t k = 0; k < want.size(); ++k) {
      ++out.entries;
      if (social.at(i, k) != want[k]) ++out.social;
    }
  }

  sns::NavigationMap nav;
  nav.transform.origin = {-2.0 - pos(rng) * 0.2, -2.0 - pos(rng) * 0.2};
  nav.transform.cell_size = 0.1 * static_cast<double>(n_k(rng));
  nav.transform.rows = 10 + n_grid(rng) * 5;
  nav.transform.cols = 10 + n_grid(rng) * 5;
  nav.values.resize(nav.transform.rows * nav.transform.cols);
  for (double& v : nav.values) v = (rng() % 3 == 0) ? 0.0 : count(rng);
  nav.max_value = *std::max_element(nav.values.begin(), nav.values.end());
  const std::size_t Nn = 2 * n_grid(rng);
  const sns::NavScale scales[] = {sns::NavScale::Raw, sns::NavScale::Log1p, sns::NavScale::MaxNorm};
  const sns::NavScale scale = scales[rng() % 3];
  for (const auto& p : positions) {
    const auto got = sns::navigation_tensor(p, nav, Nn, scale);
    const auto want = oracle::navigation(p, nav, Nn, scale);
    for (std::size_t k = 0; k < want.size(); ++k) {
      ++out.entries;
      if (got[k] != want[k]) ++out.navigation;
    }
  }

  sns::SemanticMap sem;
  sem.transform.origin = {-2.5 + pos(rng) * 0.1, -2.5 + pos(rng) * 0.1};
  sem.transform.cell_size = (rng() % 2 == 0) ? 0.1 : 0.25;
  sem.transform.rows = 10 + n_grid(rng) * 4;
  sem.transform.cols = 10 + n_grid(rng) * 4;
  sem.classes.resize(sem.transform.rows * sem.transform.cols);
  for (auto& c : sem.classes) c = static_cast<std::uint8_t>(rng() % sns::kSemanticClassCount);
  const std::size_t Ns = n_grid(rng);
  const double sem_cell = sem.transform.cell_size * static_cast<double>(n_k(rng));
  for (const auto& p : positions) {
    const auto got = sns::semantic_tensor(p, sem, Ns, sem_cell);
    const auto want = oracle::semantic(p, sem, Ns, sem_cell);
    for (std::size_t k = 0; k < want.size(); ++k) {
      ++out.entries;
      if (got[k] != want[k]) ++out.semantic;
    }
  }
  return out;
}

// ---- metrics --------------------------------------------------------------

inline double flat_ade(const std::vector<sns::Trajectory>& p, const std::vector<sns::Trajectory>& t) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      const double dx = p[k][i].x - t[k][i].x, dy = p[k][i].y - t[k][i].y;
      s += std::sqrt(dx * dx + dy * dy);
      ++n;
    }
  }
  return s / static_cast<double>(n);
}

inline double flat_fde(const std::vector<sns::Trajectory>& p, const std::vector<sns::Trajectory>& t) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double dx = p[k].back().x - t[k].back().x, dy = p[k].back().y - t[k].back().y;
    s += std::sqrt(dx * dx + dy * dy);
  }
  return s / static_cast<double>(p.size());
}

// Closed-form bivariate normal density.
inline double bivariate_density(const sns::GaussianParams& g, sns::Vec2 x) {
  const double pi = std::acos(-1.0);
  const double zx = (x.x - g.mu.x) / g.sigma.x, zy = (x.y - g.mu.y) / g.sigma.y;
  const double one_m = 1.0 - g.rho * g.rho;
  const double q = (zx * zx + zy * zy - 2.0 * g.rho * zx * zy) / one_m;
  return std::exp(-0.5 * q) / (2.0 * pi * g.sigma.x * g.sigma.y * std::sqrt(one_m));
}

// ---- toy window ------------------------------------------------------------

// Two pedestrians, four frames, every pooling mechanism active and tiny
// dimensions, used for end-to-end gradient checks.
struct Toy {
  sns::Scene scene;
  sns::NavigationMap nav;
  sns::SemanticMap sem;
  sns::Window window;
  sns::ModelParams params;
  sns::SceneContext context;

  sns::Tensor loss(const sns::ModelParams& p) const {
    return sns::forward_window(window, context, p, sns::ForwardOptions{}).loss;
  }

  static std::unique_ptr<Toy> make(std::uint64_t seed, sns::Variant variant = sns::Variant::Full,
                                   bool biases = true) {
    auto toy = std::make_unique<Toy>();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05), u(0.0, 1.0);
    std::vector<sns::TrackPoint> pts;
    for (long f = 0; f < 4; ++f) {
      const double t = static_cast<double>(f);
      pts.push_back({f, 1, 0.40 * t + jitter(rng), 0.10 * t + jitter(rng)});
      pts.push_back({f, 2, 0.35 + 0.30 * t + jitter(rng), 0.30 - 0.05 * t + jitter(rng)});
    }
    sns::LoadOptions lo;
    lo.frame_step = 1;
    toy->scene = sns::scene_from_points("toy", pts, lo);
    toy->window = sns::make_windows(toy->scene, 1, sns::WindowSpec{2, 4}).at(0);

    toy->nav.transform.origin = {-1.0, -1.0};
    toy->nav.transform.cell_size = 0.25;
    toy->nav.transform.rows = 14;
    toy->nav.transform.cols = 14;
    toy->nav.values.resize(14 * 14);
    for (double& v : toy->nav.values) v = 3.0 * u(rng);
    toy->nav.max_value = *std::max_element(toy->nav.values.begin(), toy->nav.values.end());

    toy->sem.transform.origin = {-1.0, -1.0};
    toy->sem.transform.cell_size = 0.125;
    toy->sem.transform.rows = 28;
    toy->sem.transform.cols = 28;
    toy->sem.classes.resize(28 * 28);
    for (auto& c : toy->sem.classes) c = static_cast<std::uint8_t>(rng() % sns::kSemanticClassCount);

    sns::ModelConfig cfg;
    cfg.variant = variant;
    cfg.hidden = 8;
    cfg.embed = 4;
    cfg.social_grid = 2;
    cfg.social_cell = 0.5;
    cfg.nav_grid = 4;
    cfg.sem_grid = 2;
    cfg.map_cell = 0.25;
    cfg.biases = biases;
    toy->params = sns::ModelParams::initialize(cfg, seed + 17);
    // Zero biases put zero-displacement inputs exactly on the ReLU kink,
    // where central differences and the tape disagree by construction.
    std::uniform_real_distribution<double> offset(-0.3, 0.3);
    for (auto& e : toy->params.entries()) {
      if (e.name.rfind("b_", 0) != 0) continue;
      for (double& v : e.tensor.mutable_values()) v += offset(rng);
    }
    toy->context.navigation = &toy->nav;
    toy->context.semantic = &toy->sem;
    return toy;
  }
};

// ---- scenes ---------------------------------------------------------------

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("sns_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace oracle
