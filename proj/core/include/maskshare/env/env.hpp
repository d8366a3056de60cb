#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace maskshare::env {

// Declarative description of an environment instance. `agents_per_type`
// follows the paper-style notation, e.g. {10,10,10} for three types of ten
// agents; agent indices are assigned in contiguous type blocks.
struct EnvSpec {
  std::string name;  // "bps" or "lbf"
  std::vector<int> agents_per_type;
  int horizon = 0;  // 0 -> per-environment default (bps 25, lbf 50)
  std::uint64_t seed = 0;

  // lbf knobs
  int grid_size = 8;
  int num_foods = 3;

  // bps knobs
  double move_step = 0.05;

  int num_agents() const;
  int num_types() const { return static_cast<int>(agents_per_type.size()); }
  int effective_horizon() const;
  void validate() const;

  bool operator==(const EnvSpec&) const = default;
};

struct StepResult {
  std::vector<std::vector<double>> observations;  // one per agent
  std::vector<double> rewards;                    // one per agent
  bool done = false;
  std::map<std::string, double> info;
};

class MultiAgentEnv {
 public:
  virtual ~MultiAgentEnv() = default;

  virtual int num_agents() const = 0;
  virtual int num_types() const = 0;
  virtual int type_of(int agent) const = 0;
  virtual int obs_dim() const = 0;
  virtual int action_dim() const = 0;

  // Starts a new episode; the layout is a deterministic function of the
  // episode seed (and the spec). Returns the initial per-agent observations.
  virtual std::vector<std::vector<double>> reset(std::uint64_t episode_seed) = 0;
  virtual StepResult step(std::span<const int> joint_action) = 0;
};

std::unique_ptr<MultiAgentEnv> make_env(const EnvSpec& spec);

// Observation/action dimensions are constants of the spec; uniform across
// agents of one environment.
int obs_dim(const EnvSpec& spec);
int action_dim(const EnvSpec& spec);

// Constructs fresh instances; used for vectorized rollout (one instance per
// parallel slot, no shared mutable state).
class EnvFactory {
 public:
  virtual ~EnvFactory() = default;
  virtual std::unique_ptr<MultiAgentEnv> make() const = 0;
};

class SpecEnvFactory : public EnvFactory {
 public:
  explicit SpecEnvFactory(EnvSpec spec) : spec_(std::move(spec)) {}
  std::unique_ptr<MultiAgentEnv> make() const override { return make_env(spec_); }
  const EnvSpec& spec() const { return spec_; }

 private:
  EnvSpec spec_;
};

// Debug trajectory dump. One line per (step, agent):
//   t agent o_0 ... o_{D-1} action reward
// with doubles printed round-trip safe and fields space-separated.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(const std::string& path);
  void record(long long t, int agent, std::span<const double> obs, int action,
              double reward);

 private:
  std::ofstream out_;
};

}  // namespace maskshare::env
