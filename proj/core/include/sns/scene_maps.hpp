#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sns/dataset.hpp"

namespace sns {

struct CellIndex {
  std::ptrdiff_t row = 0;  // along world y
  std::ptrdiff_t col = 0;  // along world x

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

// Axis-aligned world <-> grid mapping. Cell (r, c) covers
// [origin.x + c*cell, origin.x + (c+1)*cell) x [origin.y + r*cell, origin.y + (r+1)*cell).
struct GridTransform {
  Vec2 origin;
  double cell_size = 0.1;
  std::size_t rows = 0;
  std::size_t cols = 0;

  void validate() const;
  CellIndex cell_of(Vec2 world) const;  // no bounds check
  bool contains(CellIndex cell) const;
  // nullopt when the point lies outside the grid; never clamps.
  std::optional<CellIndex> world_to_cell(Vec2 world) const;
  Vec2 cell_center(CellIndex cell) const;
  std::size_t flat(CellIndex cell) const {
    return static_cast<std::size_t>(cell.row) * cols + static_cast<std::size_t>(cell.col);
  }

  // Smallest grid of `cell_size` cells covering every point of `scenes`
  // plus `margin` meters on each side; the origin is snapped to a multiple
  // of the cell size.
  static GridTransform covering(std::span<const Scene* const> scenes, double cell_size,
                                double margin);

  friend bool operator==(const GridTransform&, const GridTransform&) = default;
};

// ---- navigation map ---------------------------------------------------

struct SmoothingKernel {
  std::size_t size = 3;         // odd side length
  std::vector<double> weights;  // size*size, row-major

  static SmoothingKernel uniform(std::size_t size);
  void validate() const;
};

enum class NavScale { Raw, Log1p, MaxNorm };
NavScale parse_nav_scale(std::string_view name);
std::string_view to_string(NavScale scale);

struct NavigationMap {
  GridTransform transform;
  std::vector<double> values;  // smoothed crossing frequencies, row-major
  double max_value = 0.0;

  double at(std::size_t row, std::size_t col) const { return values[row * transform.cols + col]; }
  double total() const;
};

// Number of track points falling in each cell (points outside are dropped).
std::vector<double> raw_crossing_counts(std::span<const Scene* const> scenes,
                                        const GridTransform& transform);
NavigationMap build_navigation_map(std::span<const Scene* const> scenes,
                                   const GridTransform& transform,
                                   const SmoothingKernel& kernel = SmoothingKernel::uniform(3));
// Zero-padded 2-D correlation of `counts` with `kernel`.
NavigationMap smooth_counts(const GridTransform& transform, std::span<const double> counts,
                            const SmoothingKernel& kernel);

// Incrementally maintained smoothed map: each added point spreads its
// kernel footprint directly into the smoothed grid.
class NavigationMapBuilder {
 public:
  NavigationMapBuilder(GridTransform transform, SmoothingKernel kernel);
  // Returns false if the point falls outside the grid.
  bool add_point(Vec2 world);
  std::size_t points_added() const { return points_added_; }
  const NavigationMap& map() const { return map_; }

 private:
  SmoothingKernel kernel_;
  NavigationMap map_;
  std::size_t points_added_ = 0;
};

double scale_navigation_value(double value, NavScale scale, double max_value);

void save_navigation_map(const NavigationMap& map, const std::filesystem::path& path);
NavigationMap load_navigation_map(const std::filesystem::path& path);
// 8-bit grayscale PGM, log1p-scaled and normalized to the map maximum.
// Image row 0 is the top (largest world y).
void write_navigation_preview(const NavigationMap& map, const std::filesystem::path& path);

// ---- semantic map -----------------------------------------------------

enum class SemanticClass : std::uint8_t { Grass, Building, Obstacle, Bench, Car, Road, Sidewalk };
inline constexpr std::size_t kSemanticClassCount = 7;

std::string_view class_name(SemanticClass c);
std::optional<SemanticClass> class_from_name(std::string_view name);
std::array<double, kSemanticClassCount> one_hot(std::size_t class_index);

struct Raster {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> values;  // row-major, row 0 at the top of the image
};

// Accepts PGM (P2 or P5) or a whitespace-separated text grid.
Raster load_raster(const std::filesystem::path& path);
void save_pgm(const Raster& raster, const std::filesystem::path& path);
// JSON object mapping raster values to class names, e.g. {"0": "grass"}.
std::map<int, SemanticClass> load_legend(const std::filesystem::path& path);

struct SemanticMap {
  GridTransform transform;
  std::vector<std::uint8_t> classes;  // grid rows (row 0 = smallest y), row-major

  std::uint8_t at(std::size_t row, std::size_t col) const {
    return classes[row * transform.cols + col];
  }
  std::array<std::size_t, kSemanticClassCount> histogram() const;
};

// `transform.rows/cols` of 0 are taken from the raster.
SemanticMap semantic_map_from_raster(const Raster& raster,
                                     const std::map<int, SemanticClass>& legend,
                                     GridTransform transform);
SemanticMap load_semantic_map(const std::filesystem::path& raster_path,
                              const std::filesystem::path& legend_path, GridTransform transform);

}  // namespace sns
