#include "maskshare/cluster/mask_map.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "maskshare/nn/checkpoint.hpp"
#include "maskshare/util/errors.hpp"
#include "maskshare/util/rng.hpp"
#include "maskshare/util/text.hpp"

namespace maskshare::cluster {

MappingNetwork make_mapping_network(int latent_dim,
                                    const std::vector<int>& policy_hidden,
                                    std::uint64_t seed) {
  if (latent_dim < 1) throw ConfigError("mapping network needs latent_dim >= 1");
  if (policy_hidden.empty()) throw ConfigError("policy architecture has no hidden layers");
  const int total = std::accumulate(policy_hidden.begin(), policy_hidden.end(), 0);
  MappingNetwork mn;
  mn.seed = seed;
  mn.net = nn::make_mlp({latent_dim, 64, total}, nn::Activation::kRelu,
                        nn::OutputHead::kLinear, seed);
  // Widen the random map beyond the trainable-network init: gain on the
  // weights plus random biases so the pre-sigmoid outputs span several units.
  // With the plain init, sigmoid outputs bunch around 0.5 and a threshold of
  // 0.2 drops (almost) nothing, which defeats per-cluster subnetworks; the
  // wide init makes the activation probabilities cover (0,1).
  constexpr double kWeightGain = 12.0;
  constexpr double kBiasRange = 2.0;
  util::Rng rng(util::derive_seed(seed, "mapping-bias"));
  for (auto& layer : mn.net.weights) {
    for (double& w : layer) w *= kWeightGain;
  }
  for (auto& layer : mn.net.biases) {
    for (double& b : layer) b = rng.uniform(-kBiasRange, kBiasRange);
  }
  return mn;
}

nn::NeuronMask generate_mask(const MappingNetwork& map_net,
                             std::span<const double> center, double lambda,
                             const std::vector<int>& policy_hidden) {
  if (lambda < 0.0 || lambda >= 1.0) {
    throw ConfigError("drop threshold lambda must be in [0, 1); got " +
                      util::fmt_double_short(lambda));
  }
  const int total = std::accumulate(policy_hidden.begin(), policy_hidden.end(), 0);
  if (map_net.net.output_dim() != total) {
    throw DimensionError("mapping network output does not cover the hidden layers");
  }
  const auto raw = nn::forward(map_net.net, center, nullptr);

  nn::NeuronMask mask;
  mask.layers.resize(policy_hidden.size());
  int cursor = 0;
  for (std::size_t l = 0; l < policy_hidden.size(); ++l) {
    auto& bits = mask.layers[l];
    bits.resize(policy_hidden[l]);
    bool any_active = false;
    for (int j = 0; j < policy_hidden[l]; ++j, ++cursor) {
      const double p = 1.0 / (1.0 + std::exp(-raw[cursor]));
      bits[j] = p > lambda ? 1 : 0;
      any_active |= bits[j] != 0;
    }
    if (!any_active) {
      throw ConfigError("mask zeroes out hidden layer " + std::to_string(l) +
                        "; lower lambda or re-draw the mapping network");
    }
  }
  return mask;
}

MaskRegistry build_mask_registry(const ClusterModel& clusters, double lambda,
                                 const std::vector<int>& policy_hidden,
                                 std::uint64_t seed) {
  if (clusters.centers.empty()) throw ConfigError("cluster model has no centers");
  constexpr int kRetries = 5;
  for (int attempt = 0; attempt <= kRetries; ++attempt) {
    const std::uint64_t attempt_seed = seed + static_cast<std::uint64_t>(attempt);
    const MappingNetwork mn =
        make_mapping_network(static_cast<int>(clusters.centers[0].size()),
                             policy_hidden, attempt_seed);
    MaskRegistry registry;
    registry.lambda = lambda;
    registry.seed = attempt_seed;
    registry.policy_hidden = policy_hidden;
    bool ok = true;
    try {
      for (const auto& center : clusters.centers) {
        registry.masks.push_back(generate_mask(mn, center, lambda, policy_hidden));
      }
    } catch (const ConfigError&) {
      if (lambda < 0.0 || lambda >= 1.0) throw;  // invalid threshold, not a bad draw
      ok = false;
    }
    if (ok) {
      registry.mapping_bytes = nn::serialize_mlp(mn.net);
      return registry;
    }
  }
  throw ConfigError("mask generation left an empty layer after " +
                    std::to_string(kRetries + 1) +
                    " mapping-network draws; use a smaller lambda");
}

void write_mask_file(const std::string& path, const MaskRegistry& registry) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ContractError("cannot open mask file for writing: " + path);
  f << "lambda " << util::fmt_double(registry.lambda) << '\n';
  f << "seed " << registry.seed << '\n';
  f << "hidden";
  for (const int h : registry.policy_hidden) f << ' ' << h;
  f << '\n';
  for (std::size_t k = 0; k < registry.masks.size(); ++k) {
    f << "mask " << k << ' ';
    for (const auto& layer : registry.masks[k].layers) {
      for (const auto bit : layer) f << (bit ? '1' : '0');
    }
    f << '\n';
  }
}

MaskRegistry read_mask_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ContractError("cannot open mask file: " + path);
  MaskRegistry registry;
  std::string line;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "lambda") {
      ss >> registry.lambda;
    } else if (key == "seed") {
      ss >> registry.seed;
    } else if (key == "hidden") {
      int h;
      while (ss >> h) registry.policy_hidden.push_back(h);
    } else if (key == "mask") {
      int id;
      std::string bits;
      ss >> id >> bits;
      const int total = std::accumulate(registry.policy_hidden.begin(),
                                        registry.policy_hidden.end(), 0);
      if (static_cast<int>(bits.size()) != total) {
        throw ContractError("mask bit string length mismatch in " + path);
      }
      nn::NeuronMask mask;
      mask.layers.resize(registry.policy_hidden.size());
      int cursor = 0;
      for (std::size_t l = 0; l < registry.policy_hidden.size(); ++l) {
        mask.layers[l].resize(registry.policy_hidden[l]);
        for (int j = 0; j < registry.policy_hidden[l]; ++j, ++cursor) {
          if (bits[cursor] != '0' && bits[cursor] != '1') {
            throw ContractError("mask bits must be 0/1 in " + path);
          }
          mask.layers[l][j] = bits[cursor] == '1' ? 1 : 0;
        }
      }
      if (static_cast<int>(registry.masks.size()) != id) {
        throw ContractError("mask ids must be consecutive in " + path);
      }
      registry.masks.push_back(std::move(mask));
    }
  }
  return registry;
}

}  // namespace maskshare::cluster
