#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "maskshare/util/rng.hpp"

namespace maskshare::nn {

enum class Activation { kRelu, kTanh };

// kSoftmax: categorical head, output is a probability vector.
// kLinear: raw affine output (scalar value heads, regression heads).
enum class OutputHead { kSoftmax, kLinear };

// Per-hidden-layer binary activation vectors; 1 = neuron active, 0 = dropped.
// A dropped neuron contributes exactly zero downstream: its activation is
// forced to 0.0 (not multiplied), so the subnetwork is bit-exact.
struct NeuronMask {
  std::vector<std::vector<std::uint8_t>> layers;

  bool empty() const { return layers.empty(); }
  std::size_t total_entries() const;
  long long active_count() const;
};

// Dense feed-forward network. Weight matrix l is row-major with shape
// layer_sizes[l+1] x layer_sizes[l]; bias l has layer_sizes[l+1] entries.
struct Mlp {
  std::vector<int> layer_sizes;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  Activation hidden_activation = Activation::kRelu;
  OutputHead output_head = OutputHead::kSoftmax;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  // Number of weight/bias layers (transitions between consecutive layers).
  int num_transitions() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int num_hidden_layers() const { return static_cast<int>(layer_sizes.size()) - 2; }
  std::vector<int> hidden_sizes() const;
  long long total_hidden_neurons() const;
};

// Glorot-uniform weights (uniform on +-sqrt(6/(fan_in+fan_out))), zero biases.
Mlp make_mlp(const std::vector<int>& layer_sizes, Activation hidden_activation,
             OutputHead output_head, util::Rng& rng);
Mlp make_mlp(const std::vector<int>& layer_sizes, Activation hidden_activation,
             OutputHead output_head, std::uint64_t seed);

// Structural invariants: >= 1 hidden layer, consistent shapes, finite values.
void validate(const Mlp& net);
// Mask shape congruence with the net's hidden layers and >= 1 active neuron
// per layer.
void validate_mask(const Mlp& net, const NeuronMask& mask);

struct ForwardTrace {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;         // z_l for every transition
  std::vector<std::vector<double>> activation;  // act(z_l) before masking, hidden only
  std::vector<std::vector<double>> post;        // masked activations, hidden only
  std::vector<double> output;                   // head output
  std::vector<int> layer_sizes;                 // congruence stamp
  bool has_mask = false;
};

// Runs the network; hidden activation l is zeroed wherever mask layer l is 0.
// Softmax heads use max-subtraction and return a normalized probability
// vector. The optional trace records everything backward() needs.
std::vector<double> forward(const Mlp& net, std::span<const double> input,
                            const NeuronMask* mask, ForwardTrace* trace = nullptr);

struct GradientBuffer {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static GradientBuffer like(const Mlp& net);
  void zero();
  void add_scaled(const GradientBuffer& other, double scale);
  void scale(double s);
  bool all_finite() const;
};

// Reverse-mode pass. `upstream` is dLoss/d(head output); the softmax Jacobian
// is applied internally for softmax heads. Gradients ACCUMULATE into `grads`
// (callers zero the buffer when starting a batch). If `input_grad` is given,
// dLoss/d(input) is accumulated there as well. The trace must come from a
// forward() call on the same network and mask, otherwise ContractError.
void backward(const Mlp& net, const ForwardTrace& trace, const NeuronMask* mask,
              std::span<const double> upstream, GradientBuffer& grads,
              std::vector<double>* input_grad = nullptr);

// Same as backward() but `dloss_dpre` is the gradient at the output layer
// pre-activation (the logits for softmax heads). Loss functions that have a
// stable closed form in logit space use this entry point.
void backward_from_preactivation(const Mlp& net, const ForwardTrace& trace,
                                 const NeuronMask* mask,
                                 std::span<const double> dloss_dpre,
                                 GradientBuffer& grads,
                                 std::vector<double>* input_grad = nullptr);

// Sum over layers of out*in + out.
long long param_count(const Mlp& net);

// log softmax of the traced output logits, max-subtracted.
std::vector<double> log_softmax(std::span<const double> logits);

}  // namespace maskshare::nn
