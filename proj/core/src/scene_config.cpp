#include "sns/scene_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sns/error.hpp"

namespace sns {

using json = nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

Vec2 vec2_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(what + " must be a 2-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

SceneEntry entry_from(const json& j, const std::filesystem::path& base) {
  static const std::set<std::string> known = {"name",          "path", "columns", "frame_interval",
                                              "frame_step",    "source_interval", "grid", "semantic"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown scene field '" + key + "'");
  }
  SceneEntry e;
  e.path = resolve(base, j.at("path").get<std::string>());
  e.name = j.value("name", e.path.stem().string());
  if (j.contains("columns")) {
    const auto names = j["columns"].get<std::vector<std::string>>();
    e.load.columns = parse_column_order(names);
  }
  e.load.frame_interval = j.value("frame_interval", e.load.frame_interval);
  e.load.frame_step = j.value("frame_step", e.load.frame_step);
  e.load.source_interval = j.value("source_interval", e.load.source_interval);
  if (j.contains("grid")) {
    const json& g = j["grid"];
    GridTransform t;
    t.origin = vec2_from(g.at("origin"), "grid.origin");
    t.cell_size = g.at("cell_size").get<double>();
    t.rows = g.at("rows").get<std::size_t>();
    t.cols = g.at("cols").get<std::size_t>();
    t.validate();
    e.grid = t;
  }
  if (j.contains("semantic")) {
    const json& s = j["semantic"];
    SemanticSource src;
    src.raster = resolve(base, s.at("raster").get<std::string>());
    src.legend = resolve(base, s.at("legend").get<std::string>());
    src.origin = vec2_from(s.at("origin"), "semantic.origin");
    src.pixel_size = s.value("pixel_size", src.pixel_size);
    if (!(src.pixel_size > 0.0)) throw ConfigError("semantic.pixel_size must be positive");
    e.semantic = src;
  }
  return e;
}

}  // namespace

std::vector<SceneEntry> parse_scene_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  std::vector<SceneEntry> out;
  try {
    const json j = json::parse(json_text);
    const json& list = j.at("scenes");
    if (!list.is_array() || list.empty()) throw ConfigError("scene config: 'scenes' must be a non-empty array");
    std::set<std::string> names;
    for (const json& s : list) {
      out.push_back(entry_from(s, base_dir));
      if (!names.insert(out.back().name).second) {
        throw ConfigError("scene config: duplicate scene name '" + out.back().name + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scene config: ") + e.what());
  }
  return out;
}

std::vector<SceneEntry> load_scene_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scene config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene_config(ss.str(), path.parent_path());
}

LoadedScene load_entry(const SceneEntry& entry, double cell_size) {
  LoadedScene ls;
  ls.scene = load_scene(entry.path, entry.load, entry.name);
  if (entry.grid) {
    ls.grid = *entry.grid;
  } else {
    const Scene* one[] = {&ls.scene};
    ls.grid = GridTransform::covering(one, cell_size, kDefaultGridMargin);
  }
  if (entry.semantic) {
    GridTransform t;
    t.origin = entry.semantic->origin;
    t.cell_size = entry.semantic->pixel_size;
    ls.semantic = load_semantic_map(entry.semantic->raster, entry.semantic->legend, t);
  }
  return ls;
}

std::vector<LoadedScene> load_scenes(const std::vector<SceneEntry>& entries, double cell_size) {
  std::vector<LoadedScene> out;
  out.reserve(entries.size());
  for (const SceneEntry& e : entries) out.push_back(load_entry(e, cell_size));
  return out;
}

}  // namespace sns
