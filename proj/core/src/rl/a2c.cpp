#include "maskshare/rl/a2c.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "maskshare/util/errors.hpp"
#include "maskshare/util/rng.hpp"

namespace maskshare::rl {

void TrainerConfig::validate() const {
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("gamma must be in [0,1]");
  if (n_steps < 1) throw ConfigError("n_steps must be >= 1");
  if (learning_rate < 0.0) throw ConfigError("learning rate must be >= 0");
  if (entropy_coef < 0.0) throw ConfigError("entropy_coef must be >= 0");
  if (value_coef < 0.0) throw ConfigError("value_coef must be >= 0");
  if (num_envs < 1) throw ConfigError("num_envs must be >= 1");
  if (total_env_steps < 0) throw ConfigError("total_env_steps must be >= 0");
  if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
}

std::vector<double> compute_nstep_targets(std::span<const double> rewards,
                                          std::span<const std::uint8_t> dones,
                                          double bootstrap_value, double gamma) {
  if (rewards.size() != dones.size()) {
    throw DimensionError("rewards/dones length mismatch");
  }
  std::vector<double> targets(rewards.size());
  double y = bootstrap_value;
  for (int t = static_cast<int>(rewards.size()) - 1; t >= 0; --t) {
    y = rewards[t] + gamma * (dones[t] ? 0.0 : y);
    targets[t] = y;
  }
  return targets;
}

double policy_loss(const sharing::PolicyHandle& handle,
                   const sharing::ParameterStore& store,
                   const cluster::MaskRegistry& masks,
                   std::span<const BatchSample> batch, double entropy_coef,
                   nn::GradientBuffer& grads, double* mean_entropy) {
  if (batch.empty()) throw ContractError("policy_loss on empty batch");
  const auto& actor = store.sets[handle.actor_set].actor;
  const nn::NeuronMask* mask =
      handle.mask_id >= 0 ? &masks.masks[handle.mask_id] : nullptr;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const int actions = actor.output_dim();

  double loss = 0.0;
  double entropy_sum = 0.0;
  std::vector<double> dz(actions);
  for (const auto& sample : batch) {
    nn::ForwardTrace trace;
    const auto probs = policy_forward(handle, store, masks, *sample.obs, &trace);
    const auto logp = nn::log_softmax(trace.pre.back());
    double entropy = 0.0;
    for (int a = 0; a < actions; ++a) entropy -= probs[a] * logp[a];
    entropy_sum += entropy;
    loss += -logp[sample.action] * sample.advantage - entropy_coef * entropy;
    for (int a = 0; a < actions; ++a) {
      const double indicator = a == sample.action ? 1.0 : 0.0;
      dz[a] = inv_b * (-sample.advantage * (indicator - probs[a]) +
                       entropy_coef * probs[a] * (logp[a] + entropy));
    }
    nn::backward_from_preactivation(actor, trace, mask, dz, grads);
  }
  loss *= inv_b;
  if (!std::isfinite(loss)) throw NumericError("non-finite policy loss");
  if (mean_entropy != nullptr) *mean_entropy = entropy_sum * inv_b;
  return loss;
}

double value_loss(const sharing::PolicyHandle& handle,
                  const sharing::ParameterStore& store,
                  const cluster::MaskRegistry& masks,
                  std::span<const BatchSample> batch, nn::GradientBuffer& grads) {
  if (batch.empty()) throw ContractError("value_loss on empty batch");
  const auto& critic = store.sets[handle.critic_set].critic;
  const nn::NeuronMask* mask =
      handle.mask_id >= 0 ? &masks.masks[handle.mask_id] : nullptr;
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  double loss = 0.0;
  double upstream[1];
  for (const auto& sample : batch) {
    nn::ForwardTrace trace;
    const double v = value_forward(handle, store, masks, *sample.obs, &trace);
    const double diff = v - sample.target;
    loss += diff * diff;
    upstream[0] = 2.0 * diff * inv_b;
    nn::backward(critic, trace, mask, std::span<const double>(upstream, 1), grads);
  }
  loss *= inv_b;
  if (!std::isfinite(loss)) throw NumericError("non-finite value loss");
  return loss;
}

namespace {

int sample_action(std::span<const double> probs, util::Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    cum += probs[a];
    if (u < cum) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size()) - 1;
}

// Completed-episode return aggregation between metric emissions.
struct ReturnWindow {
  std::vector<double> type_sum;
  std::vector<long long> type_count;
  double last_mean = 0.0;
  std::vector<double> last_per_type;

  explicit ReturnWindow(int types)
      : type_sum(types, 0.0), type_count(types, 0), last_per_type(types, 0.0) {}

  void add(int type, double episode_return) {
    type_sum[type] += episode_return;
    type_count[type] += 1;
  }

  bool any() const {
    return std::any_of(type_count.begin(), type_count.end(),
                       [](long long c) { return c > 0; });
  }

  // Means since the last flush; carries previous values through empty windows.
  void flush(double& mean_out, std::vector<double>& per_type_out) {
    double sum = 0.0;
    long long count = 0;
    for (std::size_t t = 0; t < type_sum.size(); ++t) {
      if (type_count[t] > 0) {
        last_per_type[t] = type_sum[t] / type_count[t];
      }
      sum += type_sum[t];
      count += type_count[t];
    }
    if (count > 0) last_mean = sum / count;
    mean_out = last_mean;
    per_type_out = last_per_type;
    std::fill(type_sum.begin(), type_sum.end(), 0.0);
    std::fill(type_count.begin(), type_count.end(), 0);
  }
};

}  // namespace

TrainResult train(const TrainerConfig& cfg, const env::EnvFactory& factory,
                  sharing::Bindings& bindings, std::uint64_t run_seed,
                  const std::string& strategy_label, MetricsSink* sink) {
  cfg.validate();
  const auto start_time = std::chrono::steady_clock::now();
  const int num_envs = cfg.num_envs;
  const int n = cfg.n_steps;

  std::vector<std::unique_ptr<env::MultiAgentEnv>> envs;
  envs.reserve(num_envs);
  for (int e = 0; e < num_envs; ++e) envs.push_back(factory.make());
  const int agents = envs[0]->num_agents();
  const int types = envs[0]->num_types();
  if (agents != bindings.num_agents) {
    throw ContractError("bindings built for " + std::to_string(bindings.num_agents) +
                        " agents but environment has " + std::to_string(agents));
  }

  std::vector<util::Rng> act_rngs;
  act_rngs.reserve(num_envs);
  std::vector<std::uint64_t> episode_counter(num_envs, 0);
  std::vector<std::vector<std::vector<double>>> obs(num_envs);
  for (int e = 0; e < num_envs; ++e) {
    act_rngs.emplace_back(util::derive_seed(run_seed, "actions", e));
    obs[e] = envs[e]->reset(util::derive_seed(run_seed, "episode", e, 0));
  }

  std::vector<std::vector<double>> episode_return(
      num_envs, std::vector<double>(agents, 0.0));
  ReturnWindow window(types);

  // Rollout storage: [t][env][agent].
  std::vector<std::vector<std::vector<std::vector<double>>>> roll_obs(
      n, std::vector<std::vector<std::vector<double>>>(num_envs));
  std::vector<std::vector<std::vector<int>>> roll_act(
      n, std::vector<std::vector<int>>(num_envs, std::vector<int>(agents, 0)));
  std::vector<std::vector<std::vector<double>>> roll_rew(
      n, std::vector<std::vector<double>>(num_envs, std::vector<double>(agents, 0.0)));
  std::vector<std::vector<std::uint8_t>> roll_done(
      n, std::vector<std::uint8_t>(num_envs, 0));

  TrainResult result;
  result.actor_updates_per_set.assign(bindings.store.sets.size(), 0);
  result.critic_updates_per_set.assign(bindings.store.sets.size(), 0);

  // Scratch buffers shaped like each set's networks.
  std::vector<nn::GradientBuffer> actor_grads, critic_grads;
  for (const auto& set : bindings.store.sets) {
    actor_grads.push_back(nn::GradientBuffer::like(set.actor));
    critic_grads.push_back(nn::GradientBuffer::like(set.critic));
  }
  nn::GradientBuffer handle_scratch_actor =
      nn::GradientBuffer::like(bindings.store.sets[0].actor);
  nn::GradientBuffer handle_scratch_critic =
      nn::GradientBuffer::like(bindings.store.sets[0].critic);

  double loss_policy_acc = 0.0, loss_value_acc = 0.0, entropy_acc = 0.0;
  long long loss_updates = 0;
  long long next_eval = cfg.eval_interval;
  std::vector<int> joint(agents, 0);
  std::vector<double> rewards_seq(n);
  std::vector<std::uint8_t> dones_seq(n);

  auto emit = [&](long long step) {
    MetricsRow row;
    row.step = step;
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start_time)
                      .count();
    row.strategy = strategy_label;
    row.seed = run_seed;
    window.flush(row.mean_return, row.per_type_return);
    row.policy_loss = loss_updates > 0 ? loss_policy_acc / loss_updates : 0.0;
    row.value_loss = loss_updates > 0 ? loss_value_acc / loss_updates : 0.0;
    row.entropy = loss_updates > 0 ? entropy_acc / loss_updates : 0.0;
    loss_policy_acc = loss_value_acc = entropy_acc = 0.0;
    loss_updates = 0;
    result.metrics.push_back(row);
    if (sink != nullptr) sink->row(result.metrics.back());
  };

  while (result.env_steps < cfg.total_env_steps) {
    // --- collect n steps across all envs ---
    for (int t = 0; t < n; ++t) {
      for (int e = 0; e < num_envs; ++e) {
        roll_obs[t][e] = obs[e];
        for (int i = 0; i < agents; ++i) {
          const auto probs = sharing::policy_forward(
              bindings.handles[i], bindings.store, bindings.masks, obs[e][i]);
          joint[i] = sample_action(probs, act_rngs[e]);
          roll_act[t][e][i] = joint[i];
        }
        auto step_result = envs[e]->step(joint);
        roll_done[t][e] = step_result.done ? 1 : 0;
        for (int i = 0; i < agents; ++i) {
          roll_rew[t][e][i] = step_result.rewards[i];
          episode_return[e][i] += step_result.rewards[i];
        }
        if (step_result.done) {
          for (int i = 0; i < agents; ++i) {
            window.add(envs[e]->type_of(i), episode_return[e][i]);
            episode_return[e][i] = 0.0;
          }
          result.episodes_completed += 1;
          episode_counter[e] += 1;
          obs[e] = envs[e]->reset(
              util::derive_seed(run_seed, "episode", e, episode_counter[e]));
        } else {
          obs[e] = std::move(step_result.observations);
        }
      }
      result.env_steps += num_envs;
    }

    // --- targets and advantages ---
    // Batches per handle; sample storage reuses the rollout buffers.
    std::vector<std::vector<BatchSample>> per_handle(agents);
    for (auto& v : per_handle) v.reserve(static_cast<std::size_t>(n) * num_envs);
    for (int e = 0; e < num_envs; ++e) {
      for (int i = 0; i < agents; ++i) {
        const double bootstrap = sharing::value_forward(
            bindings.handles[i], bindings.store, bindings.masks, obs[e][i]);
        for (int t = 0; t < n; ++t) {
          rewards_seq[t] = roll_rew[t][e][i];
          dones_seq[t] = roll_done[t][e];
        }
        const auto targets =
            compute_nstep_targets(rewards_seq, dones_seq, bootstrap, cfg.gamma);
        for (int t = 0; t < n; ++t) {
          BatchSample s;
          s.obs = &roll_obs[t][e][i];
          s.action = roll_act[t][e][i];
          s.target = targets[t];
          s.advantage = targets[t] - sharing::value_forward(bindings.handles[i],
                                                            bindings.store,
                                                            bindings.masks,
                                                            roll_obs[t][e][i]);
          per_handle[i].push_back(s);
        }
      }
    }

    // --- one update per parameter set; all bound agents batched together ---
    const int sets = static_cast<int>(bindings.store.sets.size());
    std::vector<long long> actor_samples(sets, 0), critic_samples(sets, 0);
    for (int i = 0; i < agents; ++i) {
      actor_samples[bindings.handles[i].actor_set] +=
          static_cast<long long>(per_handle[i].size());
      critic_samples[bindings.handles[i].critic_set] +=
          static_cast<long long>(per_handle[i].size());
    }
    for (auto& g : actor_grads) g.zero();
    for (auto& g : critic_grads) g.zero();
    double iter_policy_loss = 0.0, iter_value_loss = 0.0, iter_entropy = 0.0;
    long long total_samples = 0;
    for (int i = 0; i < agents; ++i) {
      const auto& handle = bindings.handles[i];
      if (per_handle[i].empty()) continue;
      const long long set_total = actor_samples[handle.actor_set];
      const double weight =
          static_cast<double>(per_handle[i].size()) / static_cast<double>(set_total);

      handle_scratch_actor.zero();
      double entropy = 0.0;
      const double ploss =
          policy_loss(handle, bindings.store, bindings.masks, per_handle[i],
                      cfg.entropy_coef, handle_scratch_actor, &entropy);
      actor_grads[handle.actor_set].add_scaled(handle_scratch_actor, weight);

      handle_scratch_critic.zero();
      const double vloss = value_loss(handle, bindings.store, bindings.masks,
                                      per_handle[i], handle_scratch_critic);
      critic_grads[handle.critic_set].add_scaled(
          handle_scratch_critic,
          static_cast<double>(per_handle[i].size()) /
              static_cast<double>(critic_samples[handle.critic_set]));

      const double share = static_cast<double>(per_handle[i].size());
      iter_policy_loss += ploss * share;
      iter_value_loss += vloss * share;
      iter_entropy += entropy * share;
      total_samples += per_handle[i].size();
    }
    loss_policy_acc += iter_policy_loss / total_samples;
    loss_value_acc += iter_value_loss / total_samples;
    entropy_acc += iter_entropy / total_samples;
    loss_updates += 1;

    if (cfg.learning_rate > 0.0) {
      for (int s = 0; s < sets; ++s) {
        if (actor_samples[s] > 0) {
          nn::clip_grad_norm(actor_grads[s], cfg.grad_clip);
          nn::rmsprop_step(bindings.store.sets[s].actor, actor_grads[s],
                           bindings.store.sets[s].actor_state, cfg.learning_rate,
                           cfg.rmsprop_decay, cfg.rmsprop_eps);
          result.actor_updates_per_set[s] += 1;
        }
        if (critic_samples[s] > 0) {
          critic_grads[s].scale(cfg.value_coef);
          nn::clip_grad_norm(critic_grads[s], cfg.grad_clip);
          nn::rmsprop_step(bindings.store.sets[s].critic, critic_grads[s],
                           bindings.store.sets[s].critic_state, cfg.learning_rate,
                           cfg.rmsprop_decay, cfg.rmsprop_eps);
          result.critic_updates_per_set[s] += 1;
        }
      }
    }

    if (result.env_steps >= next_eval) {
      emit(result.env_steps);
      while (next_eval <= result.env_steps) next_eval += cfg.eval_interval;
    }
  }
  if (result.metrics.empty() || result.metrics.back().step != result.env_steps) {
    emit(result.env_steps);
  }
  return result;
}

}  // namespace maskshare::rl
