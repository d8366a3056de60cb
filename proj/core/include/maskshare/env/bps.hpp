#pragma once

#include <array>

#include "maskshare/env/env.hpp"

namespace maskshare::env {

// Blind-Particle Spread. Agents live in the unit square and must navigate to
// the landmark of their own (hidden) type. Observations carry geometry only:
// no agent can see its own or anyone else's type.
//
// Actions: 0 stay, 1 up (+y), 2 down (-y), 3 left (-x), 4 right (+x).
// Moves are fixed steps of spec.move_step, positions clamped to [0,1]^2.
// Reward per step: -(euclidean distance to the landmark of the agent's type).
//
// Observation layout (dimension 2*T + 2*(N-1)):
//   for each landmark t in fixed type order: (Lx - x, Ly - y)
//   for each other agent j != i in fixed agent order: (xj - x, yj - y)
struct BpsState {
  std::vector<std::array<double, 2>> agent_pos;
  std::vector<std::array<double, 2>> landmark_pos;  // one per type
  std::vector<int> agent_type;                      // hidden from observations
  int t = 0;
};

// Pure function of geometry; reads positions only, never agent_type.
std::vector<std::vector<double>> bps_observations(const BpsState& state);

class BpsEnv : public MultiAgentEnv {
 public:
  explicit BpsEnv(EnvSpec spec);

  int num_agents() const override { return spec_.num_agents(); }
  int num_types() const override { return spec_.num_types(); }
  int type_of(int agent) const override;
  int obs_dim() const override;
  int action_dim() const override { return 5; }

  std::vector<std::vector<double>> reset(std::uint64_t episode_seed) override;
  StepResult step(std::span<const int> joint_action) override;

  const BpsState& state() const { return state_; }
  BpsState& mutable_state() { return state_; }  // test hook

 private:
  EnvSpec spec_;
  BpsState state_;
  bool ready_ = false;
};

}  // namespace maskshare::env
