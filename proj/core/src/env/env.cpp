#include "maskshare/env/env.hpp"

#include <numeric>

#include "maskshare/env/bps.hpp"
#include "maskshare/env/lbf.hpp"
#include "maskshare/util/errors.hpp"
#include "maskshare/util/text.hpp"

namespace maskshare::env {

int EnvSpec::num_agents() const {
  return std::accumulate(agents_per_type.begin(), agents_per_type.end(), 0);
}

int EnvSpec::effective_horizon() const {
  if (horizon > 0) return horizon;
  return name == "lbf" ? 50 : 25;
}

void EnvSpec::validate() const {
  if (name != "bps" && name != "lbf") {
    throw ConfigError("unknown environment '" + name + "' (expected bps or lbf)");
  }
  if (agents_per_type.empty()) throw ConfigError("agents_per_type is empty");
  for (const int n : agents_per_type) {
    if (n <= 0) throw ConfigError("agents_per_type entries must be positive");
  }
  if (num_agents() < 2) throw ConfigError("need at least 2 agents");
  if (horizon < 0) throw ConfigError("horizon must be >= 1 (or 0 for default)");
  if (name == "lbf") {
    if (grid_size < 2) throw ConfigError("lbf grid_size must be >= 2");
    if (num_foods < 1) throw ConfigError("lbf num_foods must be >= 1");
    if (num_agents() + num_foods > grid_size * grid_size) {
      throw ConfigError("lbf grid too small for agents + foods");
    }
  }
  if (name == "bps" && (move_step <= 0.0 || move_step > 1.0)) {
    throw ConfigError("bps move_step must be in (0, 1]");
  }
}

std::unique_ptr<MultiAgentEnv> make_env(const EnvSpec& spec) {
  spec.validate();
  if (spec.name == "bps") return std::make_unique<BpsEnv>(spec);
  return std::make_unique<LbfEnv>(spec);
}

int obs_dim(const EnvSpec& spec) {
  spec.validate();
  const int n = spec.num_agents();
  if (spec.name == "bps") return 2 * spec.num_types() + 2 * (n - 1);
  return 3 + 4 * spec.num_foods + 2 * (n - 1);
}

int action_dim(const EnvSpec& spec) {
  spec.validate();
  return spec.name == "bps" ? 5 : 6;
}

TrajectoryWriter::TrajectoryWriter(const std::string& path) : out_(path) {
  if (!out_) throw ContractError("cannot open trajectory file: " + path);
}

void TrajectoryWriter::record(long long t, int agent, std::span<const double> obs,
                              int action, double reward) {
  out_ << t << ' ' << agent;
  for (const double o : obs) out_ << ' ' << util::fmt_double(o);
  out_ << ' ' << action << ' ' << util::fmt_double(reward) << '\n';
}

}  // namespace maskshare::env
