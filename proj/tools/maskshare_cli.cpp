// maskshare command-line front end.
//
// Subcommands:
//   size-report  relative trainable-parameter table per strategy
//   pretrain     identity pre-stage only (collect transitions, train VAE)
//   train        full per-strategy pipeline: pre-stage if needed, RL, eval
//   evaluate     greedy evaluation of previously trained checkpoints
//   all          train + aggregate report across strategies and seeds
//
// Exit code 0 on success; on failure prints the failing stage and returns 1.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "maskshare/harness/experiment.hpp"
#include "maskshare/util/rng.hpp"
#include "maskshare/util/text.hpp"

namespace {

using maskshare::harness::ExperimentConfig;

struct CommonFlags {
  std::string config_path;
  std::string env_name;
  std::string agents;
  std::string strategies;
  std::string seeds;
  std::string hidden;
  long long steps = -1;
  int clusters = -1;
  double lambda = -1.0;
  std::string out_dir;
  int eval_episodes = -1;
  int parallel_jobs = -1;
  long long vae_samples = -1;
  int vae_epochs = -1;
  bool dump_trajectories = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "experiment config file (key = value)");
  cmd->add_option("--env", f.env_name, "environment: bps or lbf");
  cmd->add_option("--agents", f.agents, "agents per type, e.g. 10,10,10");
  cmd->add_option("--strategy", f.strategies,
                  "strategy name(s): NoPS,FuPS,FuPSId,SePS,SNPPS,AdaPS");
  cmd->add_option("--seeds", f.seeds, "seed list, e.g. 0,1,2,3");
  cmd->add_option("--steps", f.steps, "total environment steps for RL training");
  cmd->add_option("--clusters", f.clusters, "number of clusters K (default: #types)");
  cmd->add_option("--lambda", f.lambda, "mask drop threshold (default 0.2)");
  cmd->add_option("--hidden", f.hidden, "hidden layer sizes, e.g. 64,64");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--eval-episodes", f.eval_episodes, "greedy evaluation episodes");
  cmd->add_option("--jobs", f.parallel_jobs,
                  "parallel strategy x seed jobs (capped by MASKSHARE_THREADS)");
  cmd->add_option("--vae-samples", f.vae_samples, "identity pre-training transitions");
  cmd->add_option("--vae-epochs", f.vae_epochs, "identity VAE training epochs");
  cmd->add_flag("--dump-trajectories", f.dump_trajectories,
                "write evaluation trajectories to a text dump");
}

ExperimentConfig build_config(const CommonFlags& f) {
  ExperimentConfig cfg;
  if (!f.config_path.empty()) {
    cfg = maskshare::harness::load_config_file(f.config_path);
  } else {
    cfg.env.name = "bps";
    cfg.env.agents_per_type = {3, 3, 3};
    cfg.strategies = {maskshare::sharing::SharingStrategy::parse("FuPS")};
    cfg.seeds = {0};
  }
  if (!f.env_name.empty()) cfg.env.name = f.env_name;
  if (!f.agents.empty()) cfg.env.agents_per_type = maskshare::util::parse_int_list(f.agents);
  if (!f.strategies.empty()) {
    cfg.strategies.clear();
    for (const auto& name : maskshare::util::split(f.strategies, ',')) {
      cfg.strategies.push_back(maskshare::sharing::SharingStrategy::parse(name));
    }
  }
  if (!f.seeds.empty()) cfg.seeds = maskshare::util::parse_u64_list(f.seeds);
  if (!f.hidden.empty()) cfg.hidden = maskshare::util::parse_int_list(f.hidden);
  if (f.steps >= 0) cfg.trainer.total_env_steps = f.steps;
  if (f.clusters >= 0) cfg.clusters = f.clusters;
  if (f.lambda >= 0.0) cfg.lambda = f.lambda;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (f.eval_episodes >= 1) cfg.eval_episodes = f.eval_episodes;
  if (f.parallel_jobs >= 1) cfg.parallel_jobs = f.parallel_jobs;
  if (f.vae_samples >= 1) cfg.vae_samples = f.vae_samples;
  if (f.vae_epochs >= 0) cfg.vae_epochs = f.vae_epochs;
  if (f.dump_trajectories) cfg.dump_trajectories = true;
  return cfg;
}

int report_failures(const maskshare::harness::RunReport& report) {
  bool failed = false;
  for (const auto& row : report.rows) {
    if (row.ok()) {
      std::printf("%-7s seed %llu  final return %.6g\n", row.strategy.c_str(),
                  static_cast<unsigned long long>(row.seed), row.final_return);
    } else {
      std::fprintf(stderr, "%-7s seed %llu  FAILED at stage %s: %s\n",
                   row.strategy.c_str(),
                   static_cast<unsigned long long>(row.seed),
                   row.failed_stage.c_str(), row.error.c_str());
      failed = true;
    }
  }
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"masked parameter sharing laboratory for multi-agent RL"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto* size_cmd = app.add_subcommand("size-report",
                                      "relative model sizes per strategy");
  auto* pretrain_cmd = app.add_subcommand("pretrain", "identity pre-stage only");
  auto* train_cmd = app.add_subcommand("train", "train the selected strategies");
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate saved checkpoints");
  auto* all_cmd = app.add_subcommand("all", "full pipeline with report");
  for (auto* cmd : {size_cmd, pretrain_cmd, train_cmd, eval_cmd, all_cmd}) {
    add_common(cmd, flags);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig cfg = build_config(flags);

    if (size_cmd->parsed()) {
      const auto arch = maskshare::harness::architecture_for(cfg);
      const int k = cfg.clusters > 0 ? cfg.clusters : cfg.env.num_types();
      std::vector<maskshare::sharing::SharingStrategy> strategies = cfg.strategies;
      if (flags.strategies.empty() && flags.config_path.empty()) {
        strategies.clear();
        for (const char* name : {"NoPS", "FuPS", "FuPSId", "SePS", "SNPPS", "AdaPS"}) {
          strategies.push_back(maskshare::sharing::SharingStrategy::parse(name));
        }
      }
      for (auto& s : strategies) s.clusters = cfg.clusters;
      const auto rows = maskshare::harness::size_report(strategies, arch,
                                                        cfg.env.num_agents(), k);
      std::printf("%-8s %14s %10s\n", "strategy", "total_params", "relative");
      for (const auto& r : rows) {
        std::printf("%-8s %14lld %10.6g\n", r.strategy.c_str(), r.total_params,
                    r.relative);
      }
      if (!cfg.out_dir.empty() && !flags.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        maskshare::harness::write_size_report_csv(cfg.out_dir + "/size_report.csv",
                                                  rows);
      }
      return 0;
    }

    if (pretrain_cmd->parsed()) {
      cfg.validate();
      for (const auto seed : cfg.seeds) {
        for (const auto& base : cfg.strategies) {
          if (!base.needs_identities()) continue;
          const std::string dir =
              maskshare::harness::run_dir_for(cfg, base.name(), seed);
          const auto pre = maskshare::harness::run_prestage(cfg, seed, dir);
          std::printf("%s seed %llu: %zu identity vectors -> %s/identity.txt\n",
                      base.name().c_str(), static_cast<unsigned long long>(seed),
                      pre.identities.size(), dir.c_str());
        }
      }
      return 0;
    }

    if (train_cmd->parsed() || all_cmd->parsed()) {
      const auto report = maskshare::harness::run(cfg);
      return report_failures(report);
    }

    if (eval_cmd->parsed()) {
      cfg.validate();
      int episodes = cfg.eval_episodes;
      for (const auto& base : cfg.strategies) {
        for (const auto seed : cfg.seeds) {
          const std::string dir =
              maskshare::harness::run_dir_for(cfg, base.name(), seed);
          const auto bindings = maskshare::harness::load_bindings_dir(dir);
          const auto result = maskshare::harness::evaluate(
              bindings, cfg.env, episodes,
              maskshare::util::derive_seed(seed, "eval"));
          std::printf("%-7s seed %llu  mean return %.6g\n", base.name().c_str(),
                      static_cast<unsigned long long>(seed), result.mean);
        }
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
