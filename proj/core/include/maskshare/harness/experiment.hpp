#pragma once

#include <optional>
#include <string>
#include <vector>

#include "maskshare/harness/config.hpp"

namespace maskshare::harness {

sharing::NetArchitecture architecture_for(const ExperimentConfig& cfg);

struct EvalResult {
  std::vector<double> per_agent;  // mean undiscounted episode return
  std::vector<double> per_type;
  double mean = 0.0;
};

// Greedy-mode evaluation (argmax action, lowest index on ties) over
// `episodes` episodes seeded disjointly from training streams.
EvalResult evaluate(const sharing::Bindings& bindings, const env::EnvSpec& spec,
                    int episodes, std::uint64_t seed,
                    env::TrajectoryWriter* trajectories = nullptr);

// Reward available to a privileged scripted policy that walks every agent
// straight to its own landmark (bps only); an upper reference for learned
// returns on the same evaluation episodes.
double bps_oracle_return(const env::EnvSpec& spec, int episodes,
                         std::uint64_t seed);

struct SizeRow {
  std::string strategy;
  long long total_params = 0;
  double relative = 0.0;  // vs FuPS on the same architecture
};

std::vector<SizeRow> size_report(
    const std::vector<sharing::SharingStrategy>& strategies,
    const sharing::NetArchitecture& arch, int num_agents, int clusters);
void write_size_report_csv(const std::string& path,
                           const std::vector<SizeRow>& rows);

struct RunRecord {
  std::string strategy;
  std::uint64_t seed = 0;
  double final_return = 0.0;  // greedy evaluation after training
  double relative_size = 0.0;
  long long pretrain_samples = 0;  // identity pre-training cost, reported apart
  std::string metrics_path;
  std::string run_dir;
  std::string failed_stage;  // empty on success
  std::string error;

  bool ok() const { return failed_stage.empty(); }
};

struct StrategySummary {
  std::string strategy;
  double min_return = 0.0;
  double mean_return = 0.0;
  double max_return = 0.0;
  int runs = 0;
};

struct RunReport {
  std::vector<RunRecord> rows;
  std::vector<StrategySummary> summary;
  bool all_ok() const;
};

// Identity artifacts produced by the pre-stage (collect -> VAE -> identity
// file); reused by SePS/AdaPS bindings and by criterion-style analyses.
struct PreStageResult {
  std::vector<vae::IdentityVector> identities;
  long long samples = 0;
  std::vector<double> vae_losses;
};

// Runs data collection + VAE training and writes <dir>/identity.txt. If the
// file already exists it is loaded instead, so RL can be re-executed without
// re-running pre-training.
PreStageResult run_prestage(const ExperimentConfig& cfg, std::uint64_t seed,
                            const std::string& dir);

// One (strategy, seed) pipeline end to end: pre-stage (when the strategy
// needs it), bindings + artifacts, RL training with a metrics CSV, greedy
// evaluation, checkpoints. Failures are captured per stage.
RunRecord run_single(const ExperimentConfig& cfg,
                     const sharing::SharingStrategy& strategy,
                     std::uint64_t seed);

// Full experiment: every strategy x seed, config echo, report + summary CSVs.
// Runs sequentially unless cfg.parallel_jobs > 1 (capped by the
// MASKSHARE_THREADS environment variable).
RunReport run(const ExperimentConfig& cfg);

// Rebuilds bindings (handles + masks + checkpointed parameters) from a run
// directory written by run_single.
sharing::Bindings load_bindings_dir(const std::string& dir);

std::string run_dir_for(const ExperimentConfig& cfg, const std::string& strategy,
                        std::uint64_t seed);

}  // namespace maskshare::harness
