#include "maskshare/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "maskshare/util/errors.hpp"

namespace maskshare::nn {

namespace {

double activate(Activation a, double z) {
  return a == Activation::kRelu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

// Derivative expressed through the pre-activation z. Relu uses the 0
// subgradient at z == 0.
double activate_deriv(Activation a, double z) {
  if (a == Activation::kRelu) return z > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(z);
  return 1.0 - t * t;
}

}  // namespace

std::size_t NeuronMask::total_entries() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.size();
  return n;
}

long long NeuronMask::active_count() const {
  long long n = 0;
  for (const auto& layer : layers) {
    for (const auto bit : layer) n += bit != 0;
  }
  return n;
}

std::vector<int> Mlp::hidden_sizes() const {
  return std::vector<int>(layer_sizes.begin() + 1, layer_sizes.end() - 1);
}

long long Mlp::total_hidden_neurons() const {
  long long n = 0;
  for (int l = 1; l + 1 < static_cast<int>(layer_sizes.size()); ++l) {
    n += layer_sizes[l];
  }
  return n;
}

Mlp make_mlp(const std::vector<int>& layer_sizes, Activation hidden_activation,
             OutputHead output_head, util::Rng& rng) {
  if (layer_sizes.size() < 3) {
    throw DimensionError("network needs at least one hidden layer");
  }
  for (const int s : layer_sizes) {
    if (s <= 0) throw DimensionError("layer sizes must be positive");
  }
  Mlp net;
  net.layer_sizes = layer_sizes;
  net.hidden_activation = hidden_activation;
  net.output_head = output_head;
  const int transitions = net.num_transitions();
  net.weights.resize(transitions);
  net.biases.resize(transitions);
  for (int t = 0; t < transitions; ++t) {
    const int fan_in = layer_sizes[t];
    const int fan_out = layer_sizes[t + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    net.weights[t].resize(static_cast<std::size_t>(fan_out) * fan_in);
    for (double& w : net.weights[t]) w = rng.uniform(-bound, bound);
    net.biases[t].assign(fan_out, 0.0);
  }
  return net;
}

Mlp make_mlp(const std::vector<int>& layer_sizes, Activation hidden_activation,
             OutputHead output_head, std::uint64_t seed) {
  util::Rng rng(seed);
  return make_mlp(layer_sizes, hidden_activation, output_head, rng);
}

void validate(const Mlp& net) {
  if (net.layer_sizes.size() < 3) {
    throw DimensionError("network needs at least one hidden layer");
  }
  const int transitions = net.num_transitions();
  if (static_cast<int>(net.weights.size()) != transitions ||
      static_cast<int>(net.biases.size()) != transitions) {
    throw DimensionError("weight/bias layer count mismatch");
  }
  for (int t = 0; t < transitions; ++t) {
    const std::size_t expect_w =
        static_cast<std::size_t>(net.layer_sizes[t + 1]) * net.layer_sizes[t];
    if (net.weights[t].size() != expect_w ||
        net.biases[t].size() != static_cast<std::size_t>(net.layer_sizes[t + 1])) {
      throw DimensionError("layer " + std::to_string(t) + " shape mismatch");
    }
    for (const double w : net.weights[t]) {
      if (!std::isfinite(w)) throw NumericError("non-finite weight in layer " + std::to_string(t));
    }
    for (const double b : net.biases[t]) {
      if (!std::isfinite(b)) throw NumericError("non-finite bias in layer " + std::to_string(t));
    }
  }
}

void validate_mask(const Mlp& net, const NeuronMask& mask) {
  const auto hidden = net.hidden_sizes();
  if (mask.layers.size() != hidden.size()) {
    throw DimensionError("mask has " + std::to_string(mask.layers.size()) +
                         " layers, network has " + std::to_string(hidden.size()) +
                         " hidden layers");
  }
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    if (mask.layers[l].size() != static_cast<std::size_t>(hidden[l])) {
      throw DimensionError("mask layer " + std::to_string(l) + " length mismatch");
    }
    bool any_active = false;
    for (const auto bit : mask.layers[l]) {
      if (bit > 1) throw DimensionError("mask entries must be 0 or 1");
      any_active |= bit != 0;
    }
    if (!any_active) {
      throw ConfigError("mask layer " + std::to_string(l) + " has no active neuron");
    }
  }
}

std::vector<double> forward(const Mlp& net, std::span<const double> input,
                            const NeuronMask* mask, ForwardTrace* trace) {
  if (static_cast<int>(input.size()) != net.input_dim()) {
    throw DimensionError("input length " + std::to_string(input.size()) +
                         " != network input dim " + std::to_string(net.input_dim()));
  }
  for (const double x : input) {
    if (!std::isfinite(x)) throw NumericError("non-finite network input");
  }
  if (mask != nullptr) validate_mask(net, *mask);

  const int transitions = net.num_transitions();
  if (trace != nullptr) {
    trace->input.assign(input.begin(), input.end());
    trace->pre.assign(transitions, {});
    trace->activation.assign(transitions - 1, {});
    trace->post.assign(transitions - 1, {});
    trace->layer_sizes = net.layer_sizes;
    trace->has_mask = mask != nullptr;
  }

  std::vector<double> current(input.begin(), input.end());
  std::vector<double> z;
  for (int t = 0; t < transitions; ++t) {
    const int in_dim = net.layer_sizes[t];
    const int out_dim = net.layer_sizes[t + 1];
    z.assign(net.biases[t].begin(), net.biases[t].end());
    const double* w = net.weights[t].data();
    for (int o = 0; o < out_dim; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * in_dim;
      double acc = 0.0;
      for (int i = 0; i < in_dim; ++i) acc += row[i] * current[i];
      z[o] += acc;
    }
    if (trace != nullptr) trace->pre[t] = z;

    if (t + 1 < transitions) {
      std::vector<double> act(out_dim);
      for (int o = 0; o < out_dim; ++o) act[o] = activate(net.hidden_activation, z[o]);
      if (trace != nullptr) trace->activation[t] = act;
      if (mask != nullptr) {
        const auto& bits = mask->layers[t];
        for (int o = 0; o < out_dim; ++o) {
          act[o] = bits[o] != 0 ? act[o] : 0.0;
        }
      }
      if (trace != nullptr) trace->post[t] = act;
      current = std::move(act);
    } else {
      if (net.output_head == OutputHead::kSoftmax) {
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        std::vector<double> probs(out_dim);
        for (int o = 0; o < out_dim; ++o) {
          probs[o] = std::exp(z[o] - zmax);
          sum += probs[o];
        }
        for (double& p : probs) p /= sum;
        current = std::move(probs);
      } else {
        current = std::move(z);
      }
    }
  }
  if (trace != nullptr) trace->output = current;
  return current;
}

GradientBuffer GradientBuffer::like(const Mlp& net) {
  GradientBuffer g;
  g.weights.resize(net.weights.size());
  g.biases.resize(net.biases.size());
  for (std::size_t t = 0; t < net.weights.size(); ++t) {
    g.weights[t].assign(net.weights[t].size(), 0.0);
    g.biases[t].assign(net.biases[t].size(), 0.0);
  }
  return g;
}

void GradientBuffer::zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void GradientBuffer::add_scaled(const GradientBuffer& other, double scale) {
  for (std::size_t t = 0; t < weights.size(); ++t) {
    for (std::size_t i = 0; i < weights[t].size(); ++i) {
      weights[t][i] += scale * other.weights[t][i];
    }
    for (std::size_t i = 0; i < biases[t].size(); ++i) {
      biases[t][i] += scale * other.biases[t][i];
    }
  }
}

void GradientBuffer::scale(double s) {
  for (auto& w : weights) {
    for (double& v : w) v *= s;
  }
  for (auto& b : biases) {
    for (double& v : b) v *= s;
  }
}

bool GradientBuffer::all_finite() const {
  for (const auto& w : weights) {
    for (const double v : w) {
      if (!std::isfinite(v)) return false;
    }
  }
  for (const auto& b : biases) {
    for (const double v : b) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

namespace {

void check_trace(const Mlp& net, const ForwardTrace& trace, const NeuronMask* mask) {
  if (trace.layer_sizes != net.layer_sizes) {
    throw ContractError("trace does not match this network's architecture");
  }
  if (trace.has_mask != (mask != nullptr)) {
    throw ContractError("trace mask presence does not match backward() mask");
  }
  const int transitions = net.num_transitions();
  if (static_cast<int>(trace.pre.size()) != transitions ||
      static_cast<int>(trace.post.size()) != transitions - 1) {
    throw ContractError("trace is incomplete; was forward() called with a trace?");
  }
  if (mask != nullptr) validate_mask(net, *mask);
}

// Shared reverse pass starting from dLoss/d(output pre-activation).
void backward_core(const Mlp& net, const ForwardTrace& trace, const NeuronMask* mask,
                   std::vector<double> grad_z, GradientBuffer& grads,
                   std::vector<double>* input_grad) {
  const int transitions = net.num_transitions();
  if (grads.weights.size() != net.weights.size()) {
    throw DimensionError("gradient buffer does not match network");
  }
  for (int t = transitions - 1; t >= 0; --t) {
    const int in_dim = net.layer_sizes[t];
    const int out_dim = net.layer_sizes[t + 1];
    const std::vector<double>& below =
        t == 0 ? trace.input : trace.post[t - 1];
    double* gw = grads.weights[t].data();
    for (int o = 0; o < out_dim; ++o) {
      const double g = grad_z[o];
      grads.biases[t][o] += g;
      double* row = gw + static_cast<std::size_t>(o) * in_dim;
      for (int i = 0; i < in_dim; ++i) row[i] += g * below[i];
    }
    // Propagate to the layer below.
    std::vector<double> grad_below(in_dim, 0.0);
    const double* w = net.weights[t].data();
    for (int o = 0; o < out_dim; ++o) {
      const double g = grad_z[o];
      if (g == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(o) * in_dim;
      for (int i = 0; i < in_dim; ++i) grad_below[i] += g * row[i];
    }
    if (t == 0) {
      if (input_grad != nullptr) {
        if (input_grad->size() != static_cast<std::size_t>(in_dim)) {
          input_grad->assign(in_dim, 0.0);
        }
        for (int i = 0; i < in_dim; ++i) (*input_grad)[i] += grad_below[i];
      }
      break;
    }
    // Through mask and activation of hidden layer t-1.
    const int hidden_index = t - 1;
    grad_z.assign(in_dim, 0.0);
    for (int i = 0; i < in_dim; ++i) {
      if (mask != nullptr && mask->layers[hidden_index][i] == 0) continue;
      grad_z[i] = grad_below[i] *
                  activate_deriv(net.hidden_activation, trace.pre[hidden_index][i]);
    }
  }
}

}  // namespace

void backward(const Mlp& net, const ForwardTrace& trace, const NeuronMask* mask,
              std::span<const double> upstream, GradientBuffer& grads,
              std::vector<double>* input_grad) {
  check_trace(net, trace, mask);
  if (static_cast<int>(upstream.size()) != net.output_dim()) {
    throw DimensionError("upstream gradient length mismatch");
  }
  const int out_dim = net.output_dim();
  std::vector<double> grad_z(out_dim);
  if (net.output_head == OutputHead::kSoftmax) {
    // dL/dz_j = p_j (u_j - sum_i u_i p_i)
    const std::vector<double>& p = trace.output;
    double dot = 0.0;
    for (int i = 0; i < out_dim; ++i) dot += upstream[i] * p[i];
    for (int j = 0; j < out_dim; ++j) grad_z[j] = p[j] * (upstream[j] - dot);
  } else {
    grad_z.assign(upstream.begin(), upstream.end());
  }
  backward_core(net, trace, mask, std::move(grad_z), grads, input_grad);
}

void backward_from_preactivation(const Mlp& net, const ForwardTrace& trace,
                                 const NeuronMask* mask,
                                 std::span<const double> dloss_dpre,
                                 GradientBuffer& grads,
                                 std::vector<double>* input_grad) {
  check_trace(net, trace, mask);
  if (static_cast<int>(dloss_dpre.size()) != net.output_dim()) {
    throw DimensionError("pre-activation gradient length mismatch");
  }
  backward_core(net, trace, mask,
                std::vector<double>(dloss_dpre.begin(), dloss_dpre.end()), grads,
                input_grad);
}

long long param_count(const Mlp& net) {
  long long total = 0;
  for (std::size_t t = 0; t + 1 < net.layer_sizes.size(); ++t) {
    const long long in_dim = net.layer_sizes[t];
    const long long out_dim = net.layer_sizes[t + 1];
    total += out_dim * in_dim + out_dim;
  }
  return total;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (const double z : logits) sum += std::exp(z - zmax);
  const double lse = zmax + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

}  // namespace maskshare::nn
