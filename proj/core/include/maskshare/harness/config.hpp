#pragma once

#include <string>
#include <vector>

#include "maskshare/env/env.hpp"
#include "maskshare/rl/a2c.hpp"
#include "maskshare/sharing/strategy.hpp"

namespace maskshare::harness {

// Full description of one experiment: environment, strategy list, seeds, and
// every tunable of the pipeline. Serialized as flat "key = value" text;
// lists are comma-separated. parse(serialize(c)) == c.
struct ExperimentConfig {
  env::EnvSpec env;
  std::vector<sharing::SharingStrategy> strategies;
  std::vector<std::uint64_t> seeds;
  rl::TrainerConfig trainer;

  std::vector<int> hidden = {64, 64};  // policy/value hidden sizes

  // identity pre-training
  int latent_dim = 2;
  int vae_epochs = 100;
  long long vae_samples = 20000;
  int vae_batch = 128;
  double vae_lr = 1e-3;
  int vae_restarts = 4;  // best center-substituted reward error wins

  // clustering / masking
  int clusters = 0;  // 0 -> number of agent types
  double lambda = 0.2;
  double snpps_drop_rate = -1.0;  // negative -> matched to AdaPS drop fraction

  int eval_episodes = 20;
  bool dump_trajectories = false;
  int parallel_jobs = 1;  // opt-in; capped by MASKSHARE_THREADS
  std::string out_dir = "runs/out";

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

// Grammar: one "key = value" pair per line; '#' starts a comment; blank lines
// ignored. Unknown keys are an error. See the README for the key list.
ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& cfg);

ExperimentConfig load_config_file(const std::string& path);
void save_config_file(const ExperimentConfig& cfg, const std::string& path);

}  // namespace maskshare::harness
