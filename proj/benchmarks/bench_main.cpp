// Microbenchmarks for the hot paths: one LSTM step, social pooling and a
// full training window (forward + backward).

#include <benchmark/benchmark.h>

#include <random>

#include "sns/model.hpp"
#include "sns/pooling.hpp"
#include "sns/synthetic.hpp"
#include "sns/training.hpp"

using namespace sns;

namespace {

std::vector<Vec2> random_positions(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::vector<Vec2> out(n);
  for (auto& p : out) p = {u(rng), u(rng)};
  return out;
}

void BM_LstmStep(benchmark::State& state) {
  const auto peds = static_cast<std::size_t>(state.range(0));
  ModelConfig cfg;
  cfg.variant = Variant::Vanilla;
  const ModelParams p = ModelParams::initialize(cfg, 1);
  const Tensor input = Tensor::zeros({peds, cfg.embed});
  const LstmState s0 = LstmState::zeros(peds, cfg.hidden);
  for (auto _ : state) {
    LstmState s = lstm_step(p, s0, input);
    benchmark::DoNotOptimize(s.h);
  }
}
BENCHMARK(BM_LstmStep)->Arg(1)->Arg(10)->Arg(40);

void BM_SocialPooling(benchmark::State& state) {
  const auto peds = static_cast<std::size_t>(state.range(0));
  const auto pos = random_positions(peds, 3);
  const Tensor hidden = Tensor::zeros({peds, 128});
  for (auto _ : state) {
    Tensor t = social_tensors(pos, hidden, 8, 0.5);
    benchmark::DoNotOptimize(t);
  }
}
BENCHMARK(BM_SocialPooling)->Arg(10)->Arg(40);

void BM_TrainStep(benchmark::State& state) {
  ConstantVelocityOptions o;
  o.pedestrians = 10;
  o.frames = 40;
  const Scene scene = constant_velocity_scene("bench", o);
  const TrainingScene ts{&scene, {nullptr, nullptr, scene.centroid()}};
  ModelConfig cfg;
  cfg.variant = Variant::Social;
  TrainConfig tc;
  tc.max_steps = 1;
  tc.epochs = 1;
  for (auto _ : state) {
    TrainResult r = train(std::span<const TrainingScene>(&ts, 1), ModelParams::initialize(cfg, 1), tc);
    benchmark::DoNotOptimize(r.log);
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
