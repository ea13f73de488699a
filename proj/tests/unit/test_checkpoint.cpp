#include <doctest.h>

#include <fstream>

#include "oracles.hpp"
#include "sns/checkpoint.hpp"
#include "sns/error.hpp"

using namespace sns;

TEST_CASE("checkpoint round trip") {
  oracle::TempDir dir("ckpt");
  ModelConfig cfg;
  cfg.variant = Variant::SocialNav;
  cfg.hidden = 6;
  cfg.embed = 3;
  cfg.social_grid = 3;
  cfg.nav_grid = 4;
  cfg.nav_scale = NavScale::MaxNorm;
  cfg.sigma = SigmaSquash::Softplus;
  cfg.biases = true;
  cfg.coords = Coords::Absolute;
  const ModelParams p = ModelParams::initialize(cfg, 12);
  TrainingState st;
  st.epochs_done = 3;
  st.steps_done = 40;
  st.shuffle_rng = "1 2 3";
  for (const auto& e : p.entries()) st.mean_square.emplace_back(e.tensor.size(), 0.125);
  save_checkpoint(dir.path / "c.bin", p, &st, R"({"command":"train"})");

  const Checkpoint c = load_checkpoint(dir.path / "c.bin");
  CHECK(model_config_to_json(c.params.config()) == model_config_to_json(cfg));
  REQUIRE(c.params.entries().size() == p.entries().size());
  for (std::size_t i = 0; i < p.entries().size(); ++i) {
    CHECK(c.params.entries()[i].name == p.entries()[i].name);
    const auto a = p.entries()[i].tensor.values(), b = c.params.entries()[i].tensor.values();
    CHECK(std::vector<double>(a.begin(), a.end()) == std::vector<double>(b.begin(), b.end()));
  }
  REQUIRE(c.training.has_value());
  CHECK(c.training->steps_done == 40);
  CHECK(c.training->mean_square == st.mean_square);
  CHECK(c.run_config.find("train") != std::string::npos);
}

TEST_CASE("vanilla checkpoint has no pooling blocks") {
  oracle::TempDir dir("ckpt");
  ModelConfig cfg;
  cfg.variant = Variant::Vanilla;
  cfg.hidden = 4;
  cfg.embed = 2;
  save_checkpoint(dir.path / "v.bin", ModelParams::initialize(cfg, 1));
  const Checkpoint c = load_checkpoint(dir.path / "v.bin");
  for (const char* name : {"W_a", "W_n", "W_s", "W_g"}) CHECK_FALSE(c.params.contains(name));
  CHECK_FALSE(c.training.has_value());
}

TEST_CASE("corrupt checkpoints are rejected") {
  oracle::TempDir dir("ckpt");
  std::ofstream(dir.path / "junk.bin") << "hello\n";
  CHECK_THROWS_AS(load_checkpoint(dir.path / "junk.bin"), DataError);
  CHECK_THROWS_AS(load_checkpoint(dir.path / "missing.bin"), DataError);

  ModelConfig cfg;
  cfg.hidden = 4;
  cfg.embed = 2;
  cfg.social_grid = 2;
  cfg.nav_grid = 2;
  cfg.sem_grid = 2;
  save_checkpoint(dir.path / "ok.bin", ModelParams::initialize(cfg, 1));
  const auto size = std::filesystem::file_size(dir.path / "ok.bin");
  std::filesystem::resize_file(dir.path / "ok.bin", size - 16);
  CHECK_THROWS_AS(load_checkpoint(dir.path / "ok.bin"), DataError);

  CHECK_THROWS_AS(save_checkpoint(dir.path / "x.bin", ModelParams::initialize(cfg, 1), nullptr, "{not json"),
                  ConfigError);
  CHECK_THROWS_AS(model_config_from_json(R"({"variant": "SNS", "hidden": "big"})"), ConfigError);
}
