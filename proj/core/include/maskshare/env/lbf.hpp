#pragma once

#include <array>

#include "maskshare/env/env.hpp"

namespace maskshare::env {

// Level-Based Foraging on a square grid. Agents carry a fixed level tied to
// their type (type k -> level k+1, persistent across episodes); food levels
// are drawn uniformly from {1,2,3} at every reset. Agents adjacent (4-way) to
// a food that issue `load` collect it iff the sum of their levels reaches the
// food level; loaders split the food's value proportionally to their levels.
// Food f is worth level_f / (sum of all food levels at reset), so a fully
// cleared episode earns total reward 1 across the team.
//
// Actions: 0 noop, 1 up (-row), 2 down (+row), 3 left, 4 right, 5 load.
// Movement resolution (simultaneous, deterministic): a move succeeds iff the
// target cell is in bounds, holds no food, no agent currently stands there,
// and no other agent attempts the same target this step; otherwise the agent
// stays.
//
// Observation layout (dimension 3 + 4*F + 2*(N-1)), coordinates normalized by
// (grid-1), levels by 3:
//   own (x, y, level)
//   per food slot f in fixed order: (x, y, level, present), zeros if collected
//   per other agent j != i in fixed agent order: (x, y)
// Other agents' levels never appear.
struct LbfState {
  std::vector<std::array<int, 2>> agent_pos;  // row, col
  std::vector<int> agent_level;
  std::vector<std::array<int, 2>> food_pos;
  std::vector<int> food_level;
  std::vector<std::uint8_t> food_present;
  int total_food_level = 0;  // at reset; reward normalizer
  int t = 0;
};

std::vector<std::vector<double>> lbf_observations(const LbfState& state,
                                                  int grid_size);

class LbfEnv : public MultiAgentEnv {
 public:
  explicit LbfEnv(EnvSpec spec);

  int num_agents() const override { return spec_.num_agents(); }
  int num_types() const override { return spec_.num_types(); }
  int type_of(int agent) const override;
  int obs_dim() const override;
  int action_dim() const override { return 6; }

  std::vector<std::vector<double>> reset(std::uint64_t episode_seed) override;
  StepResult step(std::span<const int> joint_action) override;

  const LbfState& state() const { return state_; }
  LbfState& mutable_state() { return state_; }  // test hook

 private:
  EnvSpec spec_;
  LbfState state_;
  bool ready_ = false;
};

}  // namespace maskshare::env
