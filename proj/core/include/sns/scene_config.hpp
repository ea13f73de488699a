#pragma once

// JSON scene list:
// {"scenes": [{"name": "ETH", "path": "eth.txt", "columns": ["frame","id","x","y"],
//              "frame_interval": 0.4, "frame_step": 0, "source_interval": 0,
//              "grid": {"origin": [x, y], "cell_size": 0.1, "rows": R, "cols": C},
//              "semantic": {"raster": "eth.pgm", "legend": "legend.json",
//                           "origin": [x, y], "pixel_size": 0.1}}]}
// Relative paths are resolved against the config file's directory.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sns/dataset.hpp"
#include "sns/scene_maps.hpp"

namespace sns {

struct SemanticSource {
  std::filesystem::path raster;
  std::filesystem::path legend;
  Vec2 origin;
  double pixel_size = 0.1;
};

struct SceneEntry {
  std::string name;
  std::filesystem::path path;
  LoadOptions load;
  std::optional<GridTransform> grid;
  std::optional<SemanticSource> semantic;
};

std::vector<SceneEntry> parse_scene_config(std::string_view json_text,
                                           const std::filesystem::path& base_dir = {});
std::vector<SceneEntry> load_scene_config(const std::filesystem::path& path);

struct LoadedScene {
  Scene scene;
  GridTransform grid;  // shared by the navigation map (explicit or derived)
  std::optional<SemanticMap> semantic;
};

inline constexpr double kDefaultGridMargin = 5.0;  // meters around the annotations

LoadedScene load_entry(const SceneEntry& entry, double cell_size);
std::vector<LoadedScene> load_scenes(const std::vector<SceneEntry>& entries, double cell_size);

}  // namespace sns
