#include <benchmark/benchmark.h>

#include <string>

#include "droq/network.hpp"
#include "droq/q_ensemble.hpp"
#include "droq/trainer.hpp"

using namespace droq;

namespace {

nn::Tensor filled(std::size_t rows, std::size_t cols, RandomStream& rng) {
  nn::Tensor t(rows, cols);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

// Q-network forward + backward at batch 256.
void BM_QNetForwardBackward(benchmark::State& state) {
  QNetConfig c;
  c.obs_dim = 11;
  c.act_dim = 3;
  c.hidden_width = static_cast<std::size_t>(state.range(0));
  c.dropout_rate = state.range(1) ? 0.01 : 0.0;
  c.normalization = state.range(1) ? Normalization::LayerNorm : Normalization::None;
  RandomStream rng(1);
  nn::Network net(q_network_layers(c), rng);
  const nn::Tensor x = filled(256, 14, rng);
  const nn::Tensor g = filled(256, 1, rng);
  for (auto _ : state) {
    net.forward(x, rng);
    benchmark::DoNotOptimize(net.backward(g));
  }
}
BENCHMARK(BM_QNetForwardBackward)->ArgsProduct({{32, 256}, {0, 1}})->Unit(benchmark::kMicrosecond);

// One full learning env step (G Q-iterations and a policy update).
void BM_EnvStep(benchmark::State& state, const std::string& tag) {
  TrainerConfig c;
  c.variant = resolve_variant(tag);
  c.G = 20;
  c.hidden_width = static_cast<std::size_t>(state.range(0));
  c.batch_size = 256;
  c.random_starting_steps = 300;
  c.total_env_steps = 1'000'000;
  Trainer trainer(c);
  while (!trainer.learning()) trainer.env_step();
  for (auto _ : state) trainer.env_step();
}
BENCHMARK_CAPTURE(BM_EnvStep, DroQ, std::string("DroQ"))->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EnvStep, SAC, std::string("SAC"))->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EnvStep, REDQ10, std::string("REDQ"))->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
