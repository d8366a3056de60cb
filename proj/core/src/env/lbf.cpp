#include "maskshare/env/lbf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "maskshare/util/errors.hpp"
#include "maskshare/util/rng.hpp"

namespace maskshare::env {

namespace {

constexpr int kMaxLevel = 3;

bool adjacent(const std::array<int, 2>& a, const std::array<int, 2>& b) {
  return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) == 1;
}

}  // namespace

std::vector<std::vector<double>> lbf_observations(const LbfState& state,
                                                  int grid_size) {
  const int n = static_cast<int>(state.agent_pos.size());
  const int foods = static_cast<int>(state.food_pos.size());
  const double denom = grid_size > 1 ? static_cast<double>(grid_size - 1) : 1.0;
  std::vector<std::vector<double>> obs(n);
  for (int i = 0; i < n; ++i) {
    auto& o = obs[i];
    o.reserve(3 + 4 * foods + 2 * (n - 1));
    o.push_back(state.agent_pos[i][0] / denom);
    o.push_back(state.agent_pos[i][1] / denom);
    o.push_back(state.agent_level[i] / static_cast<double>(kMaxLevel));
    for (int f = 0; f < foods; ++f) {
      if (state.food_present[f]) {
        o.push_back(state.food_pos[f][0] / denom);
        o.push_back(state.food_pos[f][1] / denom);
        o.push_back(state.food_level[f] / static_cast<double>(kMaxLevel));
        o.push_back(1.0);
      } else {
        o.push_back(0.0);
        o.push_back(0.0);
        o.push_back(0.0);
        o.push_back(0.0);
      }
    }
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      // Positions only; other agents' levels stay hidden.
      o.push_back(state.agent_pos[j][0] / denom);
      o.push_back(state.agent_pos[j][1] / denom);
    }
  }
  return obs;
}

LbfEnv::LbfEnv(EnvSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.name != "lbf") throw ConfigError("LbfEnv given spec for " + spec_.name);
}

int LbfEnv::type_of(int agent) const {
  int cursor = agent;
  for (std::size_t t = 0; t < spec_.agents_per_type.size(); ++t) {
    if (cursor < spec_.agents_per_type[t]) return static_cast<int>(t);
    cursor -= spec_.agents_per_type[t];
  }
  throw DimensionError("agent index " + std::to_string(agent) + " out of range");
}

int LbfEnv::obs_dim() const {
  return 3 + 4 * spec_.num_foods + 2 * (spec_.num_agents() - 1);
}

std::vector<std::vector<double>> LbfEnv::reset(std::uint64_t episode_seed) {
  util::Rng rng(util::derive_seed(spec_.seed, "lbf-reset", episode_seed));
  const int n = spec_.num_agents();
  const int g = spec_.grid_size;
  const int foods = spec_.num_foods;

  // Distinct cells for all entities: shuffle the full cell list, take a prefix.
  std::vector<int> cells(static_cast<std::size_t>(g) * g);
  std::iota(cells.begin(), cells.end(), 0);
  rng.shuffle(cells);

  state_.agent_pos.resize(n);
  state_.agent_level.resize(n);
  for (int i = 0; i < n; ++i) {
    state_.agent_pos[i] = {cells[i] / g, cells[i] % g};
    state_.agent_level[i] = type_of(i) + 1;  // persistent, type-defined
  }
  state_.food_pos.resize(foods);
  state_.food_level.resize(foods);
  state_.food_present.assign(foods, 1);
  state_.total_food_level = 0;
  for (int f = 0; f < foods; ++f) {
    const int cell = cells[n + f];
    state_.food_pos[f] = {cell / g, cell % g};
    state_.food_level[f] = 1 + rng.uniform_int(kMaxLevel);
    state_.total_food_level += state_.food_level[f];
  }
  state_.t = 0;
  ready_ = true;
  return lbf_observations(state_, g);
}

StepResult LbfEnv::step(std::span<const int> joint_action) {
  if (!ready_) throw ContractError("step() before reset()");
  const int n = spec_.num_agents();
  const int g = spec_.grid_size;
  if (static_cast<int>(joint_action.size()) != n) {
    throw DimensionError("joint action has " + std::to_string(joint_action.size()) +
                         " entries for " + std::to_string(n) + " agents");
  }
  for (int i = 0; i < n; ++i) {
    if (joint_action[i] < 0 || joint_action[i] >= action_dim()) {
      throw ContractError("agent " + std::to_string(i) + " action " +
                          std::to_string(joint_action[i]) + " out of range [0,6)");
    }
  }

  // Simultaneous movement with deterministic conflict resolution.
  static constexpr int kDr[] = {0, -1, 1, 0, 0};
  static constexpr int kDc[] = {0, 0, 0, -1, 1};
  std::vector<std::array<int, 2>> target(n);
  std::vector<char> moving(n, 0);
  int blocked_moves = 0;
  for (int i = 0; i < n; ++i) {
    target[i] = state_.agent_pos[i];
    const int a = joint_action[i];
    if (a < 1 || a > 4) continue;
    const int r = state_.agent_pos[i][0] + kDr[a];
    const int c = state_.agent_pos[i][1] + kDc[a];
    if (r < 0 || r >= g || c < 0 || c >= g) continue;
    bool blocked = false;
    for (int f = 0; f < spec_.num_foods && !blocked; ++f) {
      blocked = state_.food_present[f] && state_.food_pos[f][0] == r &&
                state_.food_pos[f][1] == c;
    }
    for (int j = 0; j < n && !blocked; ++j) {
      blocked = state_.agent_pos[j][0] == r && state_.agent_pos[j][1] == c;
    }
    if (!blocked) {
      target[i] = {r, c};
      moving[i] = 1;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!moving[i]) continue;
    for (int j = i + 1; j < n; ++j) {
      if (moving[j] && target[i] == target[j]) {
        moving[i] = moving[j] = 0;
        ++blocked_moves;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (moving[i]) state_.agent_pos[i] = target[i];
  }

  StepResult result;
  result.rewards.assign(n, 0.0);

  // Loading: per food, gather adjacent loaders; collect iff their level sum
  // reaches the food level; split the food's normalized value by level.
  int collected_now = 0;
  for (int f = 0; f < spec_.num_foods; ++f) {
    if (!state_.food_present[f]) continue;
    int level_sum = 0;
    std::vector<int> loaders;
    for (int i = 0; i < n; ++i) {
      if (joint_action[i] == 5 && adjacent(state_.agent_pos[i], state_.food_pos[f])) {
        loaders.push_back(i);
        level_sum += state_.agent_level[i];
      }
    }
    if (loaders.empty() || level_sum < state_.food_level[f]) continue;
    state_.food_present[f] = 0;
    ++collected_now;
    const double food_value =
        static_cast<double>(state_.food_level[f]) / state_.total_food_level;
    for (const int i : loaders) {
      result.rewards[i] +=
          food_value * state_.agent_level[i] / static_cast<double>(level_sum);
    }
  }

  state_.t += 1;
  const int remaining = static_cast<int>(
      std::count(state_.food_present.begin(), state_.food_present.end(), 1));
  result.observations = lbf_observations(state_, g);
  result.done = remaining == 0 || state_.t >= spec_.effective_horizon();
  result.info["foods_remaining"] = remaining;
  result.info["collected_now"] = collected_now;
  result.info["blocked_moves"] = blocked_moves;
  result.info["t"] = state_.t;
  return result;
}

}  // namespace maskshare::env
