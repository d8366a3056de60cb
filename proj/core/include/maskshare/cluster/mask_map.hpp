#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maskshare/cluster/kmeans.hpp"
#include "maskshare/nn/mlp.hpp"

namespace maskshare::cluster {

// Randomly initialized network that is never trained. It converts a cluster
// center into per-neuron activation probabilities for the policy's hidden
// layers: latent_dim -> 64 (relu) -> total hidden neurons (linear); the
// sigmoid is applied by generate_mask.
struct MappingNetwork {
  nn::Mlp net;
  std::uint64_t seed = 0;
};

MappingNetwork make_mapping_network(int latent_dim,
                                    const std::vector<int>& policy_hidden,
                                    std::uint64_t seed);

// M = d(sigmoid(f_m(center))) with the strict threshold
//   d(x) = 1 if x > lambda, 0 if x <= lambda,
// sliced into per-hidden-layer vectors in layer order. Pure function of its
// arguments. Requires 0 <= lambda < 1. Throws ConfigError if any layer comes
// out all-zero (callers with a retry budget catch and re-draw the network).
nn::NeuronMask generate_mask(const MappingNetwork& map_net,
                             std::span<const double> center, double lambda,
                             const std::vector<int>& policy_hidden);

// Per-cluster masks plus everything needed to reproduce them. Immutable after
// construction; the mapping network is stored byte-serialized so the frozen
// contract (identical bytes at run start and end) is directly checkable.
struct MaskRegistry {
  std::vector<nn::NeuronMask> masks;  // indexed by mask id
  double lambda = 0.2;
  std::uint64_t seed = 0;  // seed that produced the mapping network
  std::vector<int> policy_hidden;
  std::vector<std::uint8_t> mapping_bytes;

  bool empty() const { return masks.empty(); }
};

// One mask per cluster center from a single frozen mapping network. If any
// cluster's mask zeroes out a whole layer, the mapping network is re-drawn
// with seed+1 (up to 5 retries) and all masks are regenerated; past that a
// ConfigError advises a smaller lambda.
MaskRegistry build_mask_registry(const ClusterModel& clusters, double lambda,
                                 const std::vector<int>& policy_hidden,
                                 std::uint64_t seed);

// Mask artifact file. Header lines "lambda <v>", "seed <v>",
// "hidden <h1> <h2> ...", then one line per cluster: "mask <id> <bits>".
void write_mask_file(const std::string& path, const MaskRegistry& registry);
MaskRegistry read_mask_file(const std::string& path);

}  // namespace maskshare::cluster
