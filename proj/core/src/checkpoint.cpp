#include "sns/checkpoint.hpp"

#include <bit>
#include <fstream>

#include <json.hpp>

#include "sns/error.hpp"

namespace sns {

using json = nlohmann::json;

namespace {

constexpr std::string_view kMagic = "SNSLSTM-CHECKPOINT";
constexpr int kFormatVersion = 1;

json config_json(const ModelConfig& c) {
  return {{"variant", std::string(to_string(c.variant))},
          {"hidden", c.hidden},
          {"embed", c.embed},
          {"social_grid", c.social_grid},
          {"social_cell", c.social_cell},
          {"nav_grid", c.nav_grid},
          {"sem_grid", c.sem_grid},
          {"map_cell", c.map_cell},
          {"nav_scale", std::string(to_string(c.nav_scale))},
          {"sigma", std::string(to_string(c.sigma))},
          {"biases", c.biases},
          {"normalize", c.normalize},
          {"coords", std::string(to_string(c.coords))}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.hidden = j.at("hidden").get<std::size_t>();
  c.embed = j.at("embed").get<std::size_t>();
  c.social_grid = j.at("social_grid").get<std::size_t>();
  c.social_cell = j.at("social_cell").get<double>();
  c.nav_grid = j.at("nav_grid").get<std::size_t>();
  c.sem_grid = j.at("sem_grid").get<std::size_t>();
  c.map_cell = j.at("map_cell").get<double>();
  c.nav_scale = parse_nav_scale(j.at("nav_scale").get<std::string>());
  c.sigma = parse_sigma_squash(j.at("sigma").get<std::string>());
  c.biases = j.at("biases").get<bool>();
  c.normalize = j.at("normalize").get<bool>();
  c.coords = parse_coords(j.at("coords").get<std::string>());
  c.validate();
  return c;
}

void write_block(std::ostream& out, std::span<const double> values) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

}  // namespace

std::string model_config_to_json(const ModelConfig& config) { return config_json(config).dump(); }

ModelConfig model_config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model configuration: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const TrainingState* training, const std::string& run_config) {
  json header;
  header["version"] = kFormatVersion;
  header["model"] = config_json(params.config());
  json blocks = json::array();
  for (const NamedTensor& e : params.entries()) {
    blocks.push_back({{"name", e.name}, {"shape", e.tensor.shape()}});
  }
  header["blocks"] = blocks;
  if (training != nullptr) {
    if (training->mean_square.size() != params.entries().size()) {
      throw Error("save_checkpoint: optimizer state does not match parameters");
    }
    header["training"] = {{"epochs_done", training->epochs_done},
                          {"steps_done", training->steps_done},
                          {"shuffle_rng", training->shuffle_rng}};
  }
  try {
    header["run_config"] = json::parse(run_config);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run configuration is not valid JSON: ") + e.what());
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << kMagic << '\n' << header.dump() << '\n';
  for (const NamedTensor& e : params.entries()) write_block(out, e.tensor.values());
  if (training != nullptr) {
    for (const auto& v : training->mean_square) write_block(out, v);
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != kMagic) throw DataError(path.string() + ": not a checkpoint file");
  std::getline(in, header_line);
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  if (header.value("version", 0) != kFormatVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version");
  }
  Checkpoint ck;
  try {
    ck.params = ModelParams::zeros(config_from(header.at("model")));
    const json& blocks = header.at("blocks");
    if (blocks.size() != ck.params.entries().size()) {
      throw DataError(path.string() + ": parameter block count does not match its model config");
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      NamedTensor& e = ck.params.entries()[i];
      const auto name = blocks[i].at("name").get<std::string>();
      const auto shape = blocks[i].at("shape").get<Shape>();
      if (name != e.name || shape != e.tensor.shape()) {
        throw DataError(path.string() + ": block '" + name + "' " + shape_to_string(shape) +
                        " does not match expected '" + e.name + "' " +
                        shape_to_string(e.tensor.shape()));
      }
    }
    if (header.contains("run_config")) ck.run_config = header["run_config"].dump();
    if (header.contains("training")) {
      TrainingState st;
      const json& t = header["training"];
      st.epochs_done = t.at("epochs_done").get<std::size_t>();
      st.steps_done = t.at("steps_done").get<std::size_t>();
      st.shuffle_rng = t.at("shuffle_rng").get<std::string>();
      ck.training = std::move(st);
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  auto read_block = [&](std::span<double> dst, const std::string& name) {
    in.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(dst.size() * sizeof(double)));
    if (!in) throw DataError(path.string() + ": truncated payload in block " + name);
  };
  for (NamedTensor& e : ck.params.entries()) read_block(e.tensor.mutable_values(), e.name);
  if (ck.training) {
    for (const NamedTensor& e : ck.params.entries()) {
      std::vector<double> v(e.tensor.size());
      read_block(v, "opt/" + e.name);
      ck.training->mean_square.push_back(std::move(v));
    }
  }
  return ck;
}

}  // namespace sns
