#include "maskshare/sharing/strategy.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "maskshare/util/errors.hpp"
#include "maskshare/util/rng.hpp"
#include "maskshare/util/text.hpp"

namespace maskshare::sharing {

namespace {

std::vector<int> actor_sizes(const NetArchitecture& arch, bool widened, int n) {
  std::vector<int> sizes;
  sizes.push_back(arch.obs_dim + (widened ? n : 0));
  sizes.insert(sizes.end(), arch.hidden.begin(), arch.hidden.end());
  sizes.push_back(arch.action_dim);
  return sizes;
}

std::vector<int> critic_sizes(const NetArchitecture& arch, bool widened, int n) {
  std::vector<int> sizes;
  sizes.push_back(arch.obs_dim + (widened ? n : 0));
  sizes.insert(sizes.end(), arch.hidden.begin(), arch.hidden.end());
  sizes.push_back(1);
  return sizes;
}

long long count_for_sizes(const std::vector<int>& sizes) {
  long long total = 0;
  for (std::size_t t = 0; t + 1 < sizes.size(); ++t) {
    total += static_cast<long long>(sizes[t + 1]) * sizes[t] + sizes[t + 1];
  }
  return total;
}

ParameterSet make_set(const NetArchitecture& arch, bool widened, int n,
                      std::uint64_t seed) {
  ParameterSet set;
  set.actor = nn::make_mlp(actor_sizes(arch, widened, n), nn::Activation::kRelu,
                           nn::OutputHead::kSoftmax,
                           util::derive_seed(seed, "actor"));
  set.critic = nn::make_mlp(critic_sizes(arch, widened, n), nn::Activation::kRelu,
                            nn::OutputHead::kLinear,
                            util::derive_seed(seed, "critic"));
  set.actor_state = nn::RmsPropState::like(set.actor);
  set.critic_state = nn::RmsPropState::like(set.critic);
  return set;
}

cluster::ClusterModel cluster_identities(
    const std::vector<vae::IdentityVector>& identities, int num_agents, int k,
    std::uint64_t seed) {
  if (static_cast<int>(identities.size()) != num_agents) {
    throw ContractError("identity artifacts cover " +
                        std::to_string(identities.size()) + " agents, need " +
                        std::to_string(num_agents));
  }
  std::vector<std::vector<double>> points(num_agents);
  for (const auto& v : identities) {
    if (v.agent < 0 || v.agent >= num_agents) {
      throw DimensionError("identity vector for out-of-range agent");
    }
    points[v.agent] = v.z;
  }
  return cluster::kmeans(points, k, seed);
}

nn::NeuronMask draw_random_mask(const std::vector<int>& hidden, double drop_rate,
                                util::Rng& rng) {
  nn::NeuronMask mask;
  mask.layers.resize(hidden.size());
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    auto& bits = mask.layers[l];
    bits.resize(hidden[l]);
    // Re-draw a layer that comes out all-zero; every mask keeps at least one
    // active neuron per layer.
    while (true) {
      bool any = false;
      for (int j = 0; j < hidden[l]; ++j) {
        bits[j] = rng.uniform() >= drop_rate ? 1 : 0;
        any |= bits[j] != 0;
      }
      if (any) break;
    }
  }
  return mask;
}

}  // namespace

std::string SharingStrategy::name() const {
  switch (kind) {
    case StrategyKind::kNoPS: return "NoPS";
    case StrategyKind::kFuPS: return "FuPS";
    case StrategyKind::kFuPSId: return "FuPSId";
    case StrategyKind::kSePS: return "SePS";
    case StrategyKind::kSNPPS: return "SNPPS";
    case StrategyKind::kAdaPS: return "AdaPS";
  }
  return "?";
}

SharingStrategy SharingStrategy::parse(std::string_view text) {
  SharingStrategy s;
  const std::string t = util::trim(text);
  if (t == "NoPS") s.kind = StrategyKind::kNoPS;
  else if (t == "FuPS") s.kind = StrategyKind::kFuPS;
  else if (t == "FuPSId" || t == "FuPS+id") s.kind = StrategyKind::kFuPSId;
  else if (t == "SePS") s.kind = StrategyKind::kSePS;
  else if (t == "SNPPS" || t == "SNP-PS") s.kind = StrategyKind::kSNPPS;
  else if (t == "AdaPS") s.kind = StrategyKind::kAdaPS;
  else throw ConfigError("unknown strategy '" + t + "'");
  return s;
}

Bindings build_bindings(const SharingStrategy& strategy, int num_agents,
                        int num_types_hint, const NetArchitecture& arch,
                        std::uint64_t seed,
                        const std::vector<vae::IdentityVector>* identities) {
  if (num_agents < 1) throw ConfigError("need at least one agent");
  Bindings b;
  b.strategy = strategy;
  b.arch = arch;
  b.num_agents = num_agents;
  b.handles.resize(num_agents);
  for (int i = 0; i < num_agents; ++i) b.handles[i].agent = i;

  const int k = strategy.clusters > 0 ? strategy.clusters : num_types_hint;

  switch (strategy.kind) {
    case StrategyKind::kNoPS: {
      for (int i = 0; i < num_agents; ++i) {
        b.store.sets.push_back(make_set(arch, false, num_agents,
                                        util::derive_seed(seed, "set", i)));
        b.handles[i].actor_set = i;
        b.handles[i].critic_set = i;
      }
      break;
    }
    case StrategyKind::kFuPS: {
      b.store.sets.push_back(make_set(arch, false, num_agents,
                                      util::derive_seed(seed, "set", 0)));
      break;
    }
    case StrategyKind::kFuPSId: {
      b.store.sets.push_back(make_set(arch, true, num_agents,
                                      util::derive_seed(seed, "set", 0)));
      for (auto& h : b.handles) {
        h.augmentation = Augmentation::kOneHotAgentId;
        h.onehot_size = num_agents;
      }
      break;
    }
    case StrategyKind::kSePS: {
      if (identities == nullptr) {
        throw ContractError("SePS requires identity artifacts");
      }
      if (k >= num_agents || k < 1) {
        throw ConfigError("SePS requires 1 <= K < N");
      }
      b.clusters = cluster_identities(*identities, num_agents, k,
                                      util::derive_seed(seed, "kmeans"));
      for (int c = 0; c < k; ++c) {
        b.store.sets.push_back(make_set(arch, false, num_agents,
                                        util::derive_seed(seed, "set", c)));
      }
      for (int i = 0; i < num_agents; ++i) {
        b.handles[i].actor_set = b.clusters.assignment[i];
        b.handles[i].critic_set = b.clusters.assignment[i];
      }
      break;
    }
    case StrategyKind::kSNPPS: {
      b.store.sets.push_back(make_set(arch, false, num_agents,
                                      util::derive_seed(seed, "set", 0)));
      double drop = strategy.drop_rate;
      if (drop < 0.0) {
        std::optional<cluster::MaskRegistry> adaps;
        if (identities != nullptr && k >= 1 && k < num_agents) {
          const auto clusters = cluster_identities(
              *identities, num_agents, k, util::derive_seed(seed, "kmeans"));
          adaps = cluster::build_mask_registry(clusters, strategy.mask_lambda,
                                               arch.hidden,
                                               util::derive_seed(seed, "mapping"));
        }
        const int latent = identities != nullptr && !identities->empty()
                               ? static_cast<int>(identities->front().z.size())
                               : 2;
        drop = default_snpps_drop_rate(arch, latent,
                                       util::derive_seed(seed, "mapping"),
                                       strategy.mask_lambda,
                                       adaps ? &*adaps : nullptr);
      }
      if (drop >= 1.0) throw ConfigError("SNPPS drop rate must be < 1");
      b.snpps_drop_rate = drop;
      b.masks.lambda = -1.0;
      b.masks.seed = util::derive_seed(seed, "snpps");
      b.masks.policy_hidden = arch.hidden;
      util::Rng rng(b.masks.seed);
      for (int i = 0; i < num_agents; ++i) {
        b.masks.masks.push_back(draw_random_mask(arch.hidden, drop, rng));
        b.handles[i].mask_id = i;
      }
      break;
    }
    case StrategyKind::kAdaPS: {
      if (identities == nullptr) {
        throw ContractError("AdaPS requires identity artifacts");
      }
      if (k >= num_agents || k < 1) {
        throw ConfigError("AdaPS requires 1 <= K < N");
      }
      b.store.sets.push_back(make_set(arch, false, num_agents,
                                      util::derive_seed(seed, "set", 0)));
      b.clusters = cluster_identities(*identities, num_agents, k,
                                      util::derive_seed(seed, "kmeans"));
      b.masks = cluster::build_mask_registry(b.clusters, strategy.mask_lambda,
                                             arch.hidden,
                                             util::derive_seed(seed, "mapping"));
      for (int i = 0; i < num_agents; ++i) {
        b.handles[i].mask_id = b.clusters.assignment[i];
      }
      break;
    }
  }
  return b;
}

long long total_trainable_params(const ParameterStore& store) {
  long long total = 0;
  for (const auto& set : store.sets) {
    total += nn::param_count(set.actor) + nn::param_count(set.critic);
  }
  return total;
}

long long expected_total_params(const SharingStrategy& strategy,
                                const NetArchitecture& arch, int num_agents,
                                int clusters) {
  const long long per_set = count_for_sizes(actor_sizes(arch, false, num_agents)) +
                            count_for_sizes(critic_sizes(arch, false, num_agents));
  switch (strategy.kind) {
    case StrategyKind::kNoPS: return per_set * num_agents;
    case StrategyKind::kFuPS: return per_set;
    case StrategyKind::kFuPSId:
      return count_for_sizes(actor_sizes(arch, true, num_agents)) +
             count_for_sizes(critic_sizes(arch, true, num_agents));
    case StrategyKind::kSePS: return per_set * clusters;
    case StrategyKind::kSNPPS: return per_set;
    case StrategyKind::kAdaPS: return per_set;
  }
  return 0;
}

double relative_model_size(const SharingStrategy& strategy,
                           const NetArchitecture& arch, int num_agents,
                           int clusters) {
  SharingStrategy fups;
  fups.kind = StrategyKind::kFuPS;
  const long long base = expected_total_params(fups, arch, num_agents, clusters);
  const long long total = expected_total_params(strategy, arch, num_agents, clusters);
  return static_cast<double>(total) / static_cast<double>(base);
}

std::vector<double> augment_observation(const PolicyHandle& handle,
                                        std::span<const double> obs) {
  std::vector<double> x(obs.begin(), obs.end());
  if (handle.augmentation == Augmentation::kOneHotAgentId) {
    x.resize(obs.size() + handle.onehot_size, 0.0);
    x[obs.size() + handle.agent] = 1.0;
  }
  return x;
}

namespace {

const nn::NeuronMask* mask_for(const PolicyHandle& handle,
                               const cluster::MaskRegistry& masks) {
  if (handle.mask_id < 0) return nullptr;
  if (handle.mask_id >= static_cast<int>(masks.masks.size())) {
    throw ContractError("handle references mask " + std::to_string(handle.mask_id) +
                        " but registry has " + std::to_string(masks.masks.size()));
  }
  return &masks.masks[handle.mask_id];
}

}  // namespace

std::vector<double> policy_forward(const PolicyHandle& handle,
                                   const ParameterStore& store,
                                   const cluster::MaskRegistry& masks,
                                   std::span<const double> obs,
                                   nn::ForwardTrace* trace) {
  if (handle.actor_set < 0 || handle.actor_set >= static_cast<int>(store.sets.size())) {
    throw ContractError("handle references missing actor set " +
                        std::to_string(handle.actor_set));
  }
  const auto x = augment_observation(handle, obs);
  return nn::forward(store.sets[handle.actor_set].actor, x,
                     mask_for(handle, masks), trace);
}

double value_forward(const PolicyHandle& handle, const ParameterStore& store,
                     const cluster::MaskRegistry& masks,
                     std::span<const double> obs, nn::ForwardTrace* trace) {
  if (handle.critic_set < 0 || handle.critic_set >= static_cast<int>(store.sets.size())) {
    throw ContractError("handle references missing critic set " +
                        std::to_string(handle.critic_set));
  }
  const auto x = augment_observation(handle, obs);
  return nn::forward(store.sets[handle.critic_set].critic, x,
                     mask_for(handle, masks), trace)[0];
}

double default_snpps_drop_rate(const NetArchitecture& arch, int latent_dim,
                               std::uint64_t seed, double lambda,
                               const cluster::MaskRegistry* adaps_masks) {
  if (adaps_masks != nullptr && !adaps_masks->masks.empty()) {
    long long zeros = 0, total = 0;
    for (const auto& mask : adaps_masks->masks) {
      total += static_cast<long long>(mask.total_entries());
      zeros += static_cast<long long>(mask.total_entries()) - mask.active_count();
    }
    return static_cast<double>(zeros) / static_cast<double>(total);
  }
  const auto mn = cluster::make_mapping_network(latent_dim, arch.hidden, seed);
  const std::vector<double> origin(latent_dim, 0.0);
  const auto mask = cluster::generate_mask(mn, origin, lambda, arch.hidden);
  const long long total = static_cast<long long>(mask.total_entries());
  return static_cast<double>(total - mask.active_count()) /
         static_cast<double>(total);
}

void write_binding_manifest(const std::string& path, const Bindings& bindings) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ContractError("cannot open manifest for writing: " + path);
  f << "strategy " << bindings.strategy.name() << '\n';
  f << "num_agents " << bindings.num_agents << '\n';
  f << "obs_dim " << bindings.arch.obs_dim << '\n';
  f << "action_dim " << bindings.arch.action_dim << '\n';
  f << "hidden";
  for (const int h : bindings.arch.hidden) f << ' ' << h;
  f << '\n';
  f << "parameter_sets " << bindings.store.sets.size() << '\n';
  if (bindings.snpps_drop_rate >= 0.0) {
    f << "snpps_drop_rate " << util::fmt_double(bindings.snpps_drop_rate) << '\n';
  }
  f << "# agent actor_set critic_set mask_id augmentation\n";
  for (const auto& h : bindings.handles) {
    f << "handle " << h.agent << ' ' << h.actor_set << ' ' << h.critic_set << ' '
      << h.mask_id << ' '
      << (h.augmentation == Augmentation::kOneHotAgentId ? "onehot" : "none")
      << '\n';
  }
}

Bindings read_binding_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ContractError("cannot open manifest: " + path);
  Bindings b;
  std::size_t set_count = 0;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "strategy") {
      std::string name;
      ss >> name;
      b.strategy = SharingStrategy::parse(name);
    } else if (key == "num_agents") {
      ss >> b.num_agents;
    } else if (key == "obs_dim") {
      ss >> b.arch.obs_dim;
    } else if (key == "action_dim") {
      ss >> b.arch.action_dim;
    } else if (key == "hidden") {
      b.arch.hidden.clear();
      int h;
      while (ss >> h) b.arch.hidden.push_back(h);
    } else if (key == "parameter_sets") {
      ss >> set_count;
    } else if (key == "snpps_drop_rate") {
      ss >> b.snpps_drop_rate;
    } else if (key == "handle") {
      PolicyHandle h;
      std::string aug;
      ss >> h.agent >> h.actor_set >> h.critic_set >> h.mask_id >> aug;
      h.augmentation = aug == "onehot" ? Augmentation::kOneHotAgentId
                                       : Augmentation::kNone;
      h.onehot_size = h.augmentation == Augmentation::kOneHotAgentId
                          ? b.num_agents : 0;
      b.handles.push_back(h);
    }
  }
  b.store.sets.resize(set_count);  // shapes filled in when checkpoints load
  return b;
}

}  // namespace maskshare::sharing
