#include "maskshare/env/bps.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "maskshare/util/errors.hpp"
#include "maskshare/util/rng.hpp"

namespace maskshare::env {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::vector<std::vector<double>> bps_observations(const BpsState& state) {
  const int n = static_cast<int>(state.agent_pos.size());
  const int types = static_cast<int>(state.landmark_pos.size());
  std::vector<std::vector<double>> obs(n);
  for (int i = 0; i < n; ++i) {
    auto& o = obs[i];
    o.reserve(2 * types + 2 * (n - 1));
    const auto& p = state.agent_pos[i];
    for (int t = 0; t < types; ++t) {
      o.push_back(state.landmark_pos[t][0] - p[0]);
      o.push_back(state.landmark_pos[t][1] - p[1]);
    }
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      o.push_back(state.agent_pos[j][0] - p[0]);
      o.push_back(state.agent_pos[j][1] - p[1]);
    }
  }
  return obs;
}

BpsEnv::BpsEnv(EnvSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.name != "bps") throw ConfigError("BpsEnv given spec for " + spec_.name);
}

int BpsEnv::type_of(int agent) const {
  int cursor = agent;
  for (std::size_t t = 0; t < spec_.agents_per_type.size(); ++t) {
    if (cursor < spec_.agents_per_type[t]) return static_cast<int>(t);
    cursor -= spec_.agents_per_type[t];
  }
  throw DimensionError("agent index " + std::to_string(agent) + " out of range");
}

int BpsEnv::obs_dim() const {
  return 2 * spec_.num_types() + 2 * (spec_.num_agents() - 1);
}

std::vector<std::vector<double>> BpsEnv::reset(std::uint64_t episode_seed) {
  util::Rng rng(util::derive_seed(spec_.seed, "bps-reset", episode_seed));
  const int n = spec_.num_agents();
  const int types = spec_.num_types();
  state_.agent_pos.resize(n);
  state_.agent_type.resize(n);
  for (int i = 0; i < n; ++i) {
    state_.agent_pos[i] = {rng.uniform(), rng.uniform()};
    state_.agent_type[i] = type_of(i);
  }
  state_.landmark_pos.resize(types);
  for (int t = 0; t < types; ++t) {
    state_.landmark_pos[t] = {rng.uniform(), rng.uniform()};
  }
  state_.t = 0;
  ready_ = true;
  return bps_observations(state_);
}

StepResult BpsEnv::step(std::span<const int> joint_action) {
  if (!ready_) throw ContractError("step() before reset()");
  const int n = spec_.num_agents();
  if (static_cast<int>(joint_action.size()) != n) {
    throw DimensionError("joint action has " + std::to_string(joint_action.size()) +
                         " entries for " + std::to_string(n) + " agents");
  }
  for (int i = 0; i < n; ++i) {
    if (joint_action[i] < 0 || joint_action[i] >= action_dim()) {
      throw ContractError("agent " + std::to_string(i) + " action " +
                          std::to_string(joint_action[i]) + " out of range [0,5)");
    }
  }
  const double s = spec_.move_step;
  for (int i = 0; i < n; ++i) {
    auto& p = state_.agent_pos[i];
    switch (joint_action[i]) {
      case 0: break;
      case 1: p[1] = clamp01(p[1] + s); break;
      case 2: p[1] = clamp01(p[1] - s); break;
      case 3: p[0] = clamp01(p[0] - s); break;
      case 4: p[0] = clamp01(p[0] + s); break;
      default: break;
    }
  }
  state_.t += 1;

  StepResult result;
  result.rewards.resize(n);
  double dist_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& p = state_.agent_pos[i];
    const auto& lm = state_.landmark_pos[state_.agent_type[i]];
    const double dx = p[0] - lm[0];
    const double dy = p[1] - lm[1];
    const double d = std::sqrt(dx * dx + dy * dy);
    result.rewards[i] = -d;
    dist_sum += d;
  }
  result.observations = bps_observations(state_);
  result.done = state_.t >= spec_.effective_horizon();
  result.info["mean_distance"] = dist_sum / n;
  result.info["t"] = state_.t;
  return result;
}

}  // namespace maskshare::env
