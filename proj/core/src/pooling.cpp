#include "sns/pooling.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <string>

#include "sns/error.hpp"
#include "sns/log.hpp"

namespace sns {

namespace {

std::atomic<std::size_t> g_nav_outside{0};

std::ptrdiff_t floor_div(std::ptrdiff_t a, std::ptrdiff_t b) {
  std::ptrdiff_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::optional<std::size_t> social_cell(Vec2 self, Vec2 other, std::size_t grid_size,
                                       double cell_size) {
  const double half = 0.5 * static_cast<double>(grid_size) * cell_size;
  const double fx = std::floor((other.x - self.x + half) / cell_size);
  const double fy = std::floor((other.y - self.y + half) / cell_size);
  const auto n = static_cast<double>(grid_size);
  if (!(fx >= 0.0 && fx < n && fy >= 0.0 && fy < n)) return std::nullopt;
  return static_cast<std::size_t>(fy) * grid_size + static_cast<std::size_t>(fx);
}

std::vector<BlockPlacement> social_placements(std::span<const Vec2> positions,
                                              std::size_t grid_size, double cell_size) {
  if (grid_size == 0 || !(cell_size > 0.0)) {
    throw ConfigError("social grid needs a positive size and cell size");
  }
  std::vector<BlockPlacement> out;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = 0; j < positions.size(); ++j) {
      if (i == j) continue;
      if (auto cell = social_cell(positions[i], positions[j], grid_size, cell_size)) {
        out.push_back({i, *cell, j});
      }
    }
  }
  return out;
}

Tensor social_tensors(std::span<const Vec2> positions, const Tensor& hidden_prev,
                      std::size_t grid_size, double cell_size) {
  if (hidden_prev.rank() != 2 || hidden_prev.dim(0) != positions.size()) {
    throw DimensionError("social_tensors: hidden states " + shape_to_string(hidden_prev.shape()) +
                         " do not match " + std::to_string(positions.size()) + " positions");
  }
  const auto placements = social_placements(positions, grid_size, cell_size);
  return scatter_blocks(hidden_prev, positions.size(), grid_size * grid_size, placements);
}

Tensor social_tensor(std::size_t i, std::span<const Vec2> positions, const Tensor& hidden_prev,
                     std::size_t grid_size, double cell_size) {
  if (i >= positions.size()) throw DimensionError("social_tensor: pedestrian index out of range");
  const Tensor all = social_tensors(positions, hidden_prev, grid_size, cell_size);
  const std::size_t d = hidden_prev.dim(1);
  return reshape(slice(all, 0, i, i + 1), {grid_size, grid_size, d});
}

std::vector<double> navigation_tensor(Vec2 position, const NavigationMap& map,
                                      std::size_t grid_size, NavScale scale) {
  std::vector<double> out(grid_size * grid_size, 0.0);
  const auto centre = map.transform.world_to_cell(position);
  if (!centre) {
    if (g_nav_outside.fetch_add(1) == 0) {
      log_warn("pedestrian at (" + std::to_string(position.x) + ", " + std::to_string(position.y) +
               ") lies outside the navigation map; using an all-zero navigation tensor");
    }
    return out;
  }
  const auto half = static_cast<std::ptrdiff_t>(grid_size / 2);
  const auto n = static_cast<std::ptrdiff_t>(grid_size);
  for (std::ptrdiff_t m = 0; m < n; ++m) {
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      const CellIndex cell{centre->row - half + m, centre->col - half + k};
      if (!map.transform.contains(cell)) continue;
      out[static_cast<std::size_t>(m * n + k)] =
          scale_navigation_value(map.values[map.transform.flat(cell)], scale, map.max_value);
    }
  }
  return out;
}

Tensor navigation_tensors(std::span<const Vec2> positions, const NavigationMap& map,
                          std::size_t grid_size, NavScale scale) {
  const std::size_t width = grid_size * grid_size;
  std::vector<double> out;
  out.reserve(positions.size() * width);
  for (const Vec2& p : positions) {
    const auto row = navigation_tensor(p, map, grid_size, scale);
    out.insert(out.end(), row.begin(), row.end());
  }
  return Tensor::from({positions.size(), width}, std::move(out));
}

std::vector<double> semantic_tensor(Vec2 position, const SemanticMap& map, std::size_t grid_size,
                                    double cell_size) {
  const double ratio = cell_size / map.transform.cell_size;
  const auto k = static_cast<std::ptrdiff_t>(std::llround(ratio));
  if (k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-9) {
    throw ConfigError("semantic cell size " + std::to_string(cell_size) +
                      " is not a whole multiple of the raster pixel size " +
                      std::to_string(map.transform.cell_size));
  }
  constexpr std::size_t L = kSemanticClassCount;
  std::vector<double> out(grid_size * grid_size * L, 0.0);
  const CellIndex pixel = map.transform.cell_of(position);
  const std::ptrdiff_t centre_row = floor_div(pixel.row, k);
  const std::ptrdiff_t centre_col = floor_div(pixel.col, k);
  const auto half = static_cast<std::ptrdiff_t>(grid_size / 2);
  const auto n = static_cast<std::ptrdiff_t>(grid_size);
  const auto rows = static_cast<std::ptrdiff_t>(map.transform.rows);
  const auto cols = static_cast<std::ptrdiff_t>(map.transform.cols);
  for (std::ptrdiff_t m = 0; m < n; ++m) {
    const std::ptrdiff_t r0 = std::max<std::ptrdiff_t>((centre_row - half + m) * k, 0);
    const std::ptrdiff_t r1 = std::min<std::ptrdiff_t>((centre_row - half + m + 1) * k, rows);
    for (std::ptrdiff_t q = 0; q < n; ++q) {
      const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>((centre_col - half + q) * k, 0);
      const std::ptrdiff_t c1 = std::min<std::ptrdiff_t>((centre_col - half + q + 1) * k, cols);
      if (r0 >= r1 || c0 >= c1) continue;
      std::array<std::size_t, L> hist{};
      for (std::ptrdiff_t r = r0; r < r1; ++r) {
        for (std::ptrdiff_t c = c0; c < c1; ++c) {
          ++hist[map.classes[static_cast<std::size_t>(r * cols + c)]];
        }
      }
      const auto total = static_cast<double>((r1 - r0) * (c1 - c0));
      double* dst = out.data() + static_cast<std::size_t>(m * n + q) * L;
      for (std::size_t l = 0; l < L; ++l) dst[l] = static_cast<double>(hist[l]) / total;
    }
  }
  return out;
}

Tensor semantic_tensors(std::span<const Vec2> positions, const SemanticMap& map,
                        std::size_t grid_size, double cell_size) {
  const std::size_t width = grid_size * grid_size * kSemanticClassCount;
  std::vector<double> out;
  out.reserve(positions.size() * width);
  for (const Vec2& p : positions) {
    const auto row = semantic_tensor(p, map, grid_size, cell_size);
    out.insert(out.end(), row.begin(), row.end());
  }
  return Tensor::from({positions.size(), width}, std::move(out));
}

std::size_t navigation_outside_count() { return g_nav_outside.load(); }

}  // namespace sns
