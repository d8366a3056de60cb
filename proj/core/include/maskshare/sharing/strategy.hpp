#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maskshare/cluster/mask_map.hpp"
#include "maskshare/nn/mlp.hpp"
#include "maskshare/nn/optim.hpp"
#include "maskshare/vae/identity_vae.hpp"

namespace maskshare::sharing {

enum class StrategyKind { kNoPS, kFuPS, kFuPSId, kSePS, kSNPPS, kAdaPS };

// Parameter-set contract per strategy (N agents, K clusters):
//   NoPS   N sets                      FuPS    1 set
//   FuPSId 1 set, input widened by N   SePS    K sets
//   SNPPS  1 set + N per-agent random masks
//   AdaPS  1 set + K per-cluster masks from the mapping network
struct SharingStrategy {
  StrategyKind kind = StrategyKind::kFuPS;
  int clusters = 0;         // SePS/AdaPS; 0 -> number of agent types
  double drop_rate = -1.0;  // SNPPS; negative -> matched to AdaPS at lambda
  double mask_lambda = 0.2;

  std::string name() const;
  static SharingStrategy parse(std::string_view text);
  bool needs_identities() const {
    return kind == StrategyKind::kSePS || kind == StrategyKind::kAdaPS;
  }

  bool operator==(const SharingStrategy&) const = default;
};

enum class Augmentation { kNone, kOneHotAgentId };

struct PolicyHandle {
  int agent = 0;
  int actor_set = 0;
  int critic_set = 0;
  int mask_id = -1;  // -1: unmasked
  Augmentation augmentation = Augmentation::kNone;
  int onehot_size = 0;  // N when augmentation is one-hot
};

struct ParameterSet {
  nn::Mlp actor;
  nn::Mlp critic;
  nn::RmsPropState actor_state;
  nn::RmsPropState critic_state;
};

struct ParameterStore {
  std::vector<ParameterSet> sets;
};

struct NetArchitecture {
  int obs_dim = 0;
  int action_dim = 0;
  std::vector<int> hidden = {64, 64};
};

struct Bindings {
  SharingStrategy strategy;
  NetArchitecture arch;
  int num_agents = 0;
  ParameterStore store;
  std::vector<PolicyHandle> handles;
  cluster::MaskRegistry masks;      // empty when the strategy has none
  cluster::ClusterModel clusters;   // k == 0 when unused
  double snpps_drop_rate = -1.0;    // realized value for SNPPS
};

// Builds the parameter store and per-agent handles for a strategy.
// `identities` must be non-null for SePS and AdaPS (the VAE/k-means pipeline
// products); `num_types_hint` supplies the default K. Deterministic per seed.
Bindings build_bindings(const SharingStrategy& strategy, int num_agents,
                        int num_types_hint, const NetArchitecture& arch,
                        std::uint64_t seed,
                        const std::vector<vae::IdentityVector>* identities);

long long total_trainable_params(const ParameterStore& store);

// Closed-form count without building networks; agrees with the built store.
long long expected_total_params(const SharingStrategy& strategy,
                                const NetArchitecture& arch, int num_agents,
                                int clusters);

// Trainable parameters relative to FuPS on the same architecture.
double relative_model_size(const SharingStrategy& strategy,
                           const NetArchitecture& arch, int num_agents,
                           int clusters);

std::vector<double> augment_observation(const PolicyHandle& handle,
                                        std::span<const double> obs);

// Routes through the handle's parameter set and mask.
std::vector<double> policy_forward(const PolicyHandle& handle,
                                   const ParameterStore& store,
                                   const cluster::MaskRegistry& masks,
                                   std::span<const double> obs,
                                   nn::ForwardTrace* trace = nullptr);
double value_forward(const PolicyHandle& handle, const ParameterStore& store,
                     const cluster::MaskRegistry& masks,
                     std::span<const double> obs,
                     nn::ForwardTrace* trace = nullptr);

// Drop rate SNPPS uses when none is configured: the empirical drop fraction
// of AdaPS masks at `lambda` under the same mapping seed. Measured from the
// actual cluster masks when identities are available, otherwise estimated
// from the mask the mapping network assigns to the origin (where identity
// posteriors start).
double default_snpps_drop_rate(const NetArchitecture& arch, int latent_dim,
                               std::uint64_t seed, double lambda,
                               const cluster::MaskRegistry* adaps_masks);

// Audit manifest: architecture, strategy, and one line per agent handle.
void write_binding_manifest(const std::string& path, const Bindings& bindings);
Bindings read_binding_manifest(const std::string& path);

}  // namespace maskshare::sharing
