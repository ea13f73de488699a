// Writes synthetic scenes plus a scene list usable by `sns --scenes`.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sns/error.hpp"
#include "sns/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void write_semantic(const sns::SemanticMap& map, const fs::path& raster, const fs::path& legend) {
  const auto& g = map.transform;
  sns::Raster r;
  r.rows = g.rows;
  r.cols = g.cols;
  r.values.resize(g.rows * g.cols);
  for (std::size_t row = 0; row < g.rows; ++row) {
    for (std::size_t col = 0; col < g.cols; ++col) {
      r.values[(g.rows - 1 - row) * g.cols + col] = map.at(row, col);
    }
  }
  sns::save_pgm(r, raster);
  json l = json::object();
  for (std::size_t c = 0; c < sns::kSemanticClassCount; ++c) {
    l[std::to_string(c)] = std::string(sns::class_name(static_cast<sns::SemanticClass>(c)));
  }
  std::ofstream(legend) << l.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic scene generator for sns", "sns-synth"};
  std::string kind = "cv";
  std::string out = "synthetic";
  std::size_t count = 5;
  std::size_t pedestrians = 20;
  std::uint64_t seed = 1;
  double pixel = 0.1;
  app.add_option("--kind", kind, "cv (constant velocity) | obstacle")->capture_default_str();
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--count", count, "Number of scenes")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--pedestrians", pedestrians, "Pedestrians per scene")->capture_default_str();
  app.add_option("--seed", seed, "Base seed")->capture_default_str();
  app.add_option("--pixel", pixel, "Semantic raster pixel size (obstacle)")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    if (kind != "cv" && kind != "obstacle") throw sns::ConfigError("--kind must be cv or obstacle");
    fs::create_directories(out);
    json list = json::array();
    for (std::size_t i = 0; i < count; ++i) {
      const std::string name = kind + std::to_string(i + 1);
      json entry = {{"name", name}, {"path", name + ".txt"}, {"frame_interval", 0.4}, {"frame_step", 1}};
      if (kind == "cv") {
        sns::ConstantVelocityOptions o;
        o.pedestrians = pedestrians;
        o.seed = seed + i;
        sns::save_scene(sns::constant_velocity_scene(name, o), fs::path(out) / (name + ".txt"));
      } else {
        sns::ObstacleOptions o;
        o.pedestrians = pedestrians;
        o.pixel = pixel;
        o.seed = seed + i;
        const sns::ObstacleScene s = sns::obstacle_scene(name, o);
        sns::save_scene(s.scene, fs::path(out) / (name + ".txt"));
        write_semantic(s.semantic, fs::path(out) / (name + ".pgm"), fs::path(out) / "legend.json");
        entry["semantic"] = {{"raster", name + ".pgm"},
                             {"legend", "legend.json"},
                             {"origin", {s.semantic.transform.origin.x, s.semantic.transform.origin.y}},
                             {"pixel_size", pixel}};
      }
      list.push_back(entry);
    }
    std::ofstream(fs::path(out) / "scenes.json") << json{{"scenes", list}}.dump(2) << "\n";
    std::cout << "wrote " << count << " " << kind << " scenes to " << out << "\n";
  } catch (const sns::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
