#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "maskshare/env/env.hpp"
#include "maskshare/sharing/strategy.hpp"

namespace maskshare::rl {

struct TrainerConfig {
  double gamma = 0.99;
  int n_steps = 5;
  double learning_rate = 1e-3;  // 0 disables updates (dry-run)
  double entropy_coef = 0.003;
  double value_coef = 0.5;
  double grad_clip = 0.5;  // global-norm clip per parameter set
  int num_envs = 8;
  long long total_env_steps = 200000;
  long long eval_interval = 10000;
  double rmsprop_decay = 0.99;
  double rmsprop_eps = 1e-8;

  void validate() const;

  bool operator==(const TrainerConfig&) const = default;
};

struct MetricsRow {
  long long step = 0;
  double wall_ms = 0.0;
  std::string strategy;
  std::uint64_t seed = 0;
  double mean_return = 0.0;
  std::vector<double> per_type_return;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

class MetricsSink {
 public:
  virtual ~MetricsSink() = default;
  virtual void row(const MetricsRow& r) = 0;
};

// n-step discounted targets over one collected sequence:
//   y_t = r_t + gamma * (done_t ? 0 : y_{t+1}),  y_n = bootstrap_value.
// Termination inside the window truncates the tail; with no terminations this
// is sum_j gamma^j r_{t+j} + gamma^{n-t} * bootstrap.
std::vector<double> compute_nstep_targets(std::span<const double> rewards,
                                          std::span<const std::uint8_t> dones,
                                          double bootstrap_value, double gamma);

struct BatchSample {
  const std::vector<double>* obs = nullptr;  // raw observation (pre-augmentation)
  int action = 0;
  double target = 0.0;     // n-step return y
  double advantage = 0.0;  // y - V(o), treated as constant
};

// loss = -mean[ log pi(a|o) * adv ] - entropy_coef * mean[ H(pi(.|o)) ].
// Gradients flow through the handle's mask only and ACCUMULATE into `grads`
// (already mean-normalized over this batch). Returns the loss; `mean_entropy`
// optionally receives mean policy entropy.
double policy_loss(const sharing::PolicyHandle& handle,
                   const sharing::ParameterStore& store,
                   const cluster::MaskRegistry& masks,
                   std::span<const BatchSample> batch, double entropy_coef,
                   nn::GradientBuffer& grads, double* mean_entropy = nullptr);

// loss = mean[ (V(o) - y)^2 ], y constant. Gradients accumulate into `grads`.
double value_loss(const sharing::PolicyHandle& handle,
                  const sharing::ParameterStore& store,
                  const cluster::MaskRegistry& masks,
                  std::span<const BatchSample> batch, nn::GradientBuffer& grads);

struct TrainResult {
  std::vector<MetricsRow> metrics;
  std::vector<long long> actor_updates_per_set;
  std::vector<long long> critic_updates_per_set;
  long long env_steps = 0;
  long long episodes_completed = 0;
};

// Synchronous vectorized A2C. Collects n_steps across num_envs instances,
// computes targets, then applies one RMSProp update per parameter set with
// the samples of every agent bound to that set batched together. Fully
// deterministic per (config, seed); wall-clock fields excepted.
TrainResult train(const TrainerConfig& cfg, const env::EnvFactory& factory,
                  sharing::Bindings& bindings, std::uint64_t run_seed,
                  const std::string& strategy_label, MetricsSink* sink = nullptr);

}  // namespace maskshare::rl
