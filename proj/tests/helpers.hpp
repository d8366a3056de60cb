#pragma once

// Shared fixtures and independent oracles used across the test suites.

#include <cmath>
#include <functional>
#include <vector>

#include "maskshare/env/env.hpp"
#include "maskshare/nn/mlp.hpp"
#include "maskshare/sharing/strategy.hpp"

namespace testutil {

// Central finite differences over every parameter of `net` against the
// analytic gradients in `grads`. `loss` must recompute the loss from the
// (temporarily perturbed) network. Returns the worst scaled relative error
//   |analytic - fd| / max(1, |analytic|, |fd|).
inline double max_fd_gradient_error(
    maskshare::nn::Mlp& net, const maskshare::nn::GradientBuffer& grads,
    const std::function<double()>& loss, double epsilon = 1e-4) {
  double worst = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + epsilon;
    const double up = loss();
    param = saved - epsilon;
    const double down = loss();
    param = saved;
    const double fd = (up - down) / (2.0 * epsilon);
    const double err =
        std::abs(analytic - fd) / std::max({1.0, std::abs(analytic), std::abs(fd)});
    worst = std::max(worst, err);
  };
  for (std::size_t t = 0; t < net.weights.size(); ++t) {
    for (std::size_t i = 0; i < net.weights[t].size(); ++i) {
      probe(net.weights[t][i], grads.weights[t][i]);
    }
    for (std::size_t i = 0; i < net.biases[t].size(); ++i) {
      probe(net.biases[t][i], grads.biases[t][i]);
    }
  }
  return worst;
}

// Neurons inactive in every mask of the registry, per hidden layer.
inline std::vector<std::vector<int>> neurons_masked_everywhere(
    const maskshare::cluster::MaskRegistry& registry) {
  std::vector<std::vector<int>> result;
  if (registry.masks.empty()) return result;
  const auto& first = registry.masks.front();
  result.resize(first.layers.size());
  for (std::size_t l = 0; l < first.layers.size(); ++l) {
    for (std::size_t j = 0; j < first.layers[l].size(); ++j) {
      bool everywhere = true;
      for (const auto& mask : registry.masks) {
        everywhere &= mask.layers[l][j] == 0;
      }
      if (everywhere) result[l].push_back(static_cast<int>(j));
    }
  }
  return result;
}

// Bitwise comparison of every parameter incident to the given hidden neurons
// (incoming row + bias on transition l, outgoing column on transition l+1).
inline bool masked_params_untouched(
    const maskshare::nn::Mlp& before, const maskshare::nn::Mlp& after,
    const std::vector<std::vector<int>>& dead_neurons) {
  for (std::size_t l = 0; l < dead_neurons.size(); ++l) {
    const int in_dim = before.layer_sizes[l];
    const int out_dim_next = before.layer_sizes[l + 2];
    const int width = before.layer_sizes[l + 1];
    for (const int j : dead_neurons[l]) {
      for (int i = 0; i < in_dim; ++i) {
        if (before.weights[l][static_cast<std::size_t>(j) * in_dim + i] !=
            after.weights[l][static_cast<std::size_t>(j) * in_dim + i]) {
          return false;
        }
      }
      if (before.biases[l][j] != after.biases[l][j]) return false;
      for (int o = 0; o < out_dim_next; ++o) {
        if (before.weights[l + 1][static_cast<std::size_t>(o) * width + j] !=
            after.weights[l + 1][static_cast<std::size_t>(o) * width + j]) {
          return false;
        }
      }
    }
  }
  return true;
}

// Single-agent bandit: constant observation, one-step episodes, reward 1 for
// action 1 and 0 otherwise. The analytic optimum is deterministic action 1.
class BanditEnv : public maskshare::env::MultiAgentEnv {
 public:
  int num_agents() const override { return 1; }
  int num_types() const override { return 1; }
  int type_of(int) const override { return 0; }
  int obs_dim() const override { return 1; }
  int action_dim() const override { return 3; }

  std::vector<std::vector<double>> reset(std::uint64_t) override {
    return {{1.0}};
  }

  maskshare::env::StepResult step(std::span<const int> joint_action) override {
    maskshare::env::StepResult r;
    r.observations = {{1.0}};
    r.rewards = {joint_action[0] == 1 ? 1.0 : 0.0};
    r.done = true;
    return r;
  }
};

class BanditFactory : public maskshare::env::EnvFactory {
 public:
  std::unique_ptr<maskshare::env::MultiAgentEnv> make() const override {
    return std::make_unique<BanditEnv>();
  }
};

}  // namespace testutil
