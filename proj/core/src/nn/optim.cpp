#include "maskshare/nn/optim.hpp"

#include <cmath>
#include <string>

#include "maskshare/util/errors.hpp"

namespace maskshare::nn {

namespace {

void check_step_inputs(const Mlp& net, const GradientBuffer& grads, double lr) {
  if (lr <= 0.0) throw ConfigError("learning rate must be > 0");
  if (grads.weights.size() != net.weights.size()) {
    throw DimensionError("gradient buffer does not match network");
  }
  for (std::size_t t = 0; t < grads.weights.size(); ++t) {
    if (grads.weights[t].size() != net.weights[t].size() ||
        grads.biases[t].size() != net.biases[t].size()) {
      throw DimensionError("gradient layer " + std::to_string(t) + " shape mismatch");
    }
    for (const double g : grads.weights[t]) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite weight gradient in layer " + std::to_string(t));
      }
    }
    for (const double g : grads.biases[t]) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite bias gradient in layer " + std::to_string(t));
      }
    }
  }
}

}  // namespace

void sgd_step(Mlp& net, const GradientBuffer& grads, double learning_rate) {
  check_step_inputs(net, grads, learning_rate);
  for (std::size_t t = 0; t < net.weights.size(); ++t) {
    for (std::size_t i = 0; i < net.weights[t].size(); ++i) {
      net.weights[t][i] -= learning_rate * grads.weights[t][i];
    }
    for (std::size_t i = 0; i < net.biases[t].size(); ++i) {
      net.biases[t][i] -= learning_rate * grads.biases[t][i];
    }
  }
}

RmsPropState RmsPropState::like(const Mlp& net) {
  RmsPropState s;
  s.w_acc.resize(net.weights.size());
  s.b_acc.resize(net.biases.size());
  for (std::size_t t = 0; t < net.weights.size(); ++t) {
    s.w_acc[t].assign(net.weights[t].size(), 0.0);
    s.b_acc[t].assign(net.biases[t].size(), 0.0);
  }
  return s;
}

void rmsprop_step(Mlp& net, const GradientBuffer& grads, RmsPropState& state,
                  double learning_rate, double decay, double epsilon) {
  check_step_inputs(net, grads, learning_rate);
  if (state.w_acc.size() != net.weights.size()) {
    throw DimensionError("optimizer state does not match network");
  }
  for (std::size_t t = 0; t < net.weights.size(); ++t) {
    for (std::size_t i = 0; i < net.weights[t].size(); ++i) {
      const double g = grads.weights[t][i];
      double& s = state.w_acc[t][i];
      s = decay * s + (1.0 - decay) * g * g;
      net.weights[t][i] -= learning_rate * g / std::sqrt(s + epsilon);
    }
    for (std::size_t i = 0; i < net.biases[t].size(); ++i) {
      const double g = grads.biases[t][i];
      double& s = state.b_acc[t][i];
      s = decay * s + (1.0 - decay) * g * g;
      net.biases[t][i] -= learning_rate * g / std::sqrt(s + epsilon);
    }
  }
}

double global_grad_norm(const GradientBuffer& grads) {
  double sq = 0.0;
  for (const auto& w : grads.weights) {
    for (const double g : w) sq += g * g;
  }
  for (const auto& b : grads.biases) {
    for (const double g : b) sq += g * g;
  }
  return std::sqrt(sq);
}

void clip_grad_norm(GradientBuffer& grads, double max_norm) {
  const double norm = global_grad_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    grads.scale(max_norm / norm);
  }
}

}  // namespace maskshare::nn
