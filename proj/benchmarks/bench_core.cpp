#include <benchmark/benchmark.h>

#include "maskshare/cluster/kmeans.hpp"
#include "maskshare/cluster/mask_map.hpp"
#include "maskshare/env/env.hpp"
#include "maskshare/nn/mlp.hpp"
#include "maskshare/rl/a2c.hpp"
#include "maskshare/util/rng.hpp"

using namespace maskshare;

namespace {

nn::Mlp policy_net(int hidden) {
  return nn::make_mlp({22, hidden, hidden, 5}, nn::Activation::kRelu,
                      nn::OutputHead::kSoftmax, 1);
}

std::vector<double> random_input(int dim, std::uint64_t seed) {
  util::Rng rng(seed);
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

void BM_forward(benchmark::State& state) {
  const auto net = policy_net(static_cast<int>(state.range(0)));
  const auto input = random_input(22, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nn::forward(net, input, nullptr));
  }
}
BENCHMARK(BM_forward)->Arg(32)->Arg(64)->Arg(128);

void BM_forward_masked(benchmark::State& state) {
  const int h = static_cast<int>(state.range(0));
  const auto net = policy_net(h);
  const auto input = random_input(22, 3);
  util::Rng rng(9);
  nn::NeuronMask mask;
  mask.layers.assign(2, std::vector<std::uint8_t>(h, 1));
  for (auto& layer : mask.layers) {
    for (auto& bit : layer) bit = rng.uniform() < 0.2 ? 0 : 1;
    layer[0] = 1;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(nn::forward(net, input, &mask));
  }
}
BENCHMARK(BM_forward_masked)->Arg(32)->Arg(64)->Arg(128);

void BM_forward_backward(benchmark::State& state) {
  const auto net = policy_net(static_cast<int>(state.range(0)));
  const auto input = random_input(22, 3);
  const std::vector<double> upstream = {1.0, -0.5, 0.25, 0.0, 0.1};
  auto grads = nn::GradientBuffer::like(net);
  for (auto _ : state) {
    nn::ForwardTrace trace;
    nn::forward(net, input, nullptr, &trace);
    grads.zero();
    nn::backward(net, trace, nullptr, upstream, grads);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_forward_backward)->Arg(32)->Arg(64)->Arg(128);

void BM_env_step(benchmark::State& state) {
  env::EnvSpec spec;
  spec.name = state.range(0) == 0 ? "bps" : "lbf";
  spec.agents_per_type = {3, 3, 3};
  auto env = env::make_env(spec);
  env->reset(0);
  const std::vector<int> actions(9, 1);
  std::uint64_t episode = 0;
  for (auto _ : state) {
    const auto r = env->step(actions);
    if (r.done) env->reset(++episode);
    benchmark::DoNotOptimize(r.rewards);
  }
}
BENCHMARK(BM_env_step)->Arg(0)->Arg(1);

void BM_kmeans(benchmark::State& state) {
  util::Rng rng(5);
  std::vector<std::vector<double>> points;
  for (int i = 0; i < 30; ++i) {
    points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(cluster::kmeans(points, 3, 7));
  }
}
BENCHMARK(BM_kmeans);

void BM_generate_mask(benchmark::State& state) {
  const std::vector<int> hidden = {64, 64};
  const auto mn = cluster::make_mapping_network(2, hidden, 11);
  const std::vector<double> center = {0.3, -0.8};
  for (auto _ : state) {
    benchmark::DoNotOptimize(cluster::generate_mask(mn, center, 0.2, hidden));
  }
}
BENCHMARK(BM_generate_mask);

}  // namespace

BENCHMARK_MAIN();
