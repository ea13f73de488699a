#pragma once

// Per-pedestrian neighbourhood tensors fed to the LSTM embedding layers.
//
//  social     N_o x N_o x D   sum of neighbours' previous hidden states per cell
//  navigation N_n x N_n       window of the smoothed crossing-frequency map
//  semantic   N_s x N_s x 7   per-cell class frequencies of the semantic raster
//
// All tensors are flattened row-major (row = world y index, then x index,
// then channel). Cells use half-open [low, high) intervals.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sns/dataset.hpp"
#include "sns/scene_maps.hpp"
#include "sns/tensor.hpp"

namespace sns {

// Flat cell index (row * grid_size + col) of `other` relative to `self`, or
// nullopt if it lies outside the grid_size x grid_size neighbourhood.
std::optional<std::size_t> social_cell(Vec2 self, Vec2 other, std::size_t grid_size,
                                       double cell_size);

// One placement per (pedestrian, neighbour-in-range) pair; a pedestrian is
// never its own neighbour.
std::vector<BlockPlacement> social_placements(std::span<const Vec2> positions,
                                              std::size_t grid_size, double cell_size);

// Social tensors of all pedestrians as rows: [P x grid_size^2 * D], where
// hidden_prev is [P x D]. Differentiable w.r.t. hidden_prev.
Tensor social_tensors(std::span<const Vec2> positions, const Tensor& hidden_prev,
                      std::size_t grid_size, double cell_size);
// Single pedestrian, shape {grid_size, grid_size, D}.
Tensor social_tensor(std::size_t i, std::span<const Vec2> positions, const Tensor& hidden_prev,
                     std::size_t grid_size, double cell_size);

// N_n x N_n block of the (scaled) navigation map whose centre cell
// contains `position`; cells off the map are 0. A position off the map
// yields all zeros and a warning.
std::vector<double> navigation_tensor(Vec2 position, const NavigationMap& map,
                                      std::size_t grid_size, NavScale scale);
Tensor navigation_tensors(std::span<const Vec2> positions, const NavigationMap& map,
                          std::size_t grid_size, NavScale scale);

// N_s x N_s x 7 class frequencies. Pooling cells have side `cell_size`,
// which must be a whole multiple of the raster's pixel size, and are
// aligned to the raster grid. Cells with no raster pixels are zero.
std::vector<double> semantic_tensor(Vec2 position, const SemanticMap& map, std::size_t grid_size,
                                    double cell_size);
Tensor semantic_tensors(std::span<const Vec2> positions, const SemanticMap& map,
                        std::size_t grid_size, double cell_size);

// Number of navigation lookups that fell outside their map since start-up.
std::size_t navigation_outside_count();

}  // namespace sns
