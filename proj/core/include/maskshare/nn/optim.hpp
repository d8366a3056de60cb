#pragma once

#include "maskshare/nn/mlp.hpp"

namespace maskshare::nn {

// theta <- theta - lr * g, exactly.
void sgd_step(Mlp& net, const GradientBuffer& grads, double learning_rate);

struct RmsPropState {
  std::vector<std::vector<double>> w_acc;
  std::vector<std::vector<double>> b_acc;

  static RmsPropState like(const Mlp& net);
};

// Accumulator recurrence (documented contract):
//   s     <- decay * s + (1 - decay) * g^2
//   theta <- theta - lr * g / sqrt(s + eps)
void rmsprop_step(Mlp& net, const GradientBuffer& grads, RmsPropState& state,
                  double learning_rate, double decay, double epsilon);

double global_grad_norm(const GradientBuffer& grads);

// Scales gradients so the global L2 norm does not exceed max_norm.
void clip_grad_norm(GradientBuffer& grads, double max_norm);

}  // namespace maskshare::nn
