#include "maskshare/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "maskshare/env/bps.hpp"
#include "maskshare/nn/checkpoint.hpp"
#include "maskshare/util/errors.hpp"
#include "maskshare/util/rng.hpp"
#include "maskshare/util/text.hpp"

namespace fs = std::filesystem;

namespace maskshare::harness {

sharing::NetArchitecture architecture_for(const ExperimentConfig& cfg) {
  sharing::NetArchitecture arch;
  arch.obs_dim = env::obs_dim(cfg.env);
  arch.action_dim = env::action_dim(cfg.env);
  arch.hidden = cfg.hidden;
  return arch;
}

namespace {

int greedy_action(std::span<const double> probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                          probs.begin());
}

sharing::SharingStrategy instantiate(const ExperimentConfig& cfg,
                                     const sharing::SharingStrategy& base) {
  sharing::SharingStrategy s = base;
  s.clusters = cfg.clusters;
  s.mask_lambda = cfg.lambda;
  s.drop_rate = cfg.snpps_drop_rate;
  return s;
}

class CsvMetricsSink : public rl::MetricsSink {
 public:
  CsvMetricsSink(const std::string& path, int num_types) : out_(path) {
    if (!out_) throw ContractError("cannot open metrics csv: " + path);
    out_ << "step,wall_ms,strategy,seed,mean_return";
    for (int t = 0; t < num_types; ++t) out_ << ",per_type_return_" << t;
    out_ << ",policy_loss,value_loss,entropy\n";
  }

  void row(const rl::MetricsRow& r) override {
    out_ << r.step << ',' << util::fmt_double_short(r.wall_ms) << ','
         << r.strategy << ',' << r.seed << ',' << util::fmt_double(r.mean_return);
    for (const double v : r.per_type_return) out_ << ',' << util::fmt_double(v);
    out_ << ',' << util::fmt_double(r.policy_loss) << ','
         << util::fmt_double(r.value_loss) << ',' << util::fmt_double(r.entropy)
         << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

int thread_cap_from_env() {
  const char* v = std::getenv("MASKSHARE_THREADS");
  if (v == nullptr) return 1 << 20;
  try {
    const int cap = static_cast<int>(util::parse_ll(v));
    return cap >= 1 ? cap : 1;
  } catch (const ConfigError&) {
    return 1 << 20;
  }
}

}  // namespace

EvalResult evaluate(const sharing::Bindings& bindings, const env::EnvSpec& spec,
                    int episodes, std::uint64_t seed,
                    env::TrajectoryWriter* trajectories) {
  if (episodes < 1) throw ConfigError("evaluate requires episodes >= 1");
  auto env = env::make_env(spec);
  const int agents = env->num_agents();
  const int types = env->num_types();
  EvalResult result;
  result.per_agent.assign(agents, 0.0);
  result.per_type.assign(types, 0.0);
  std::vector<long long> type_counts(types, 0);

  std::vector<int> joint(agents, 0);
  long long global_t = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    auto obs = env->reset(util::derive_seed(seed, "eval-episode", ep));
    std::vector<double> ep_return(agents, 0.0);
    bool done = false;
    while (!done) {
      for (int i = 0; i < agents; ++i) {
        const auto probs = sharing::policy_forward(bindings.handles[i],
                                                   bindings.store, bindings.masks,
                                                   obs[i]);
        joint[i] = greedy_action(probs);
      }
      auto step = env->step(joint);
      for (int i = 0; i < agents; ++i) {
        if (trajectories != nullptr) {
          trajectories->record(global_t, i, obs[i], joint[i], step.rewards[i]);
        }
        ep_return[i] += step.rewards[i];
      }
      obs = std::move(step.observations);
      done = step.done;
      ++global_t;
    }
    for (int i = 0; i < agents; ++i) {
      result.per_agent[i] += ep_return[i];
      result.per_type[env->type_of(i)] += ep_return[i];
      type_counts[env->type_of(i)] += 1;
    }
  }
  double total = 0.0;
  for (int i = 0; i < agents; ++i) {
    result.per_agent[i] /= episodes;
    total += result.per_agent[i];
  }
  for (int t = 0; t < types; ++t) {
    result.per_type[t] = type_counts[t] > 0 ? result.per_type[t] / type_counts[t] : 0.0;
  }
  result.mean = total / agents;
  return result;
}

double bps_oracle_return(const env::EnvSpec& spec, int episodes,
                         std::uint64_t seed) {
  if (spec.name != "bps") throw ConfigError("oracle is defined for bps only");
  auto env_ptr = env::make_env(spec);
  auto* bps = dynamic_cast<env::BpsEnv*>(env_ptr.get());
  const int agents = spec.num_agents();
  const double step = spec.move_step;

  double total = 0.0;
  std::vector<int> joint(agents, 0);
  for (int ep = 0; ep < episodes; ++ep) {
    bps->reset(util::derive_seed(seed, "eval-episode", ep));
    double ep_total = 0.0;
    bool done = false;
    while (!done) {
      const auto& state = bps->state();
      for (int i = 0; i < agents; ++i) {
        const auto& p = state.agent_pos[i];
        const auto& lm = state.landmark_pos[state.agent_type[i]];
        const double dx = lm[0] - p[0];
        const double dy = lm[1] - p[1];
        if (std::abs(dx) >= std::abs(dy) && std::abs(dx) > step / 2.0) {
          joint[i] = dx > 0 ? 4 : 3;
        } else if (std::abs(dy) > step / 2.0) {
          joint[i] = dy > 0 ? 1 : 2;
        } else {
          joint[i] = 0;
        }
      }
      auto result = bps->step(joint);
      for (int i = 0; i < agents; ++i) ep_total += result.rewards[i];
      done = result.done;
    }
    total += ep_total / agents;
  }
  return total / episodes;
}

std::vector<SizeRow> size_report(
    const std::vector<sharing::SharingStrategy>& strategies,
    const sharing::NetArchitecture& arch, int num_agents, int clusters) {
  std::vector<SizeRow> rows;
  rows.reserve(strategies.size());
  for (const auto& s : strategies) {
    SizeRow row;
    row.strategy = s.name();
    const int k = s.clusters > 0 ? s.clusters : clusters;
    row.total_params = sharing::expected_total_params(s, arch, num_agents, k);
    row.relative = sharing::relative_model_size(s, arch, num_agents, k);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_size_report_csv(const std::string& path,
                           const std::vector<SizeRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ContractError("cannot open size report: " + path);
  f << "strategy,total_params,relative_size\n";
  for (const auto& r : rows) {
    f << r.strategy << ',' << r.total_params << ','
      << util::fmt_double_short(r.relative) << '\n';
  }
}

bool RunReport::all_ok() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const RunRecord& r) { return r.ok(); });
}

std::string run_dir_for(const ExperimentConfig& cfg, const std::string& strategy,
                        std::uint64_t seed) {
  return cfg.out_dir + "/" + strategy + "/seed" + std::to_string(seed);
}

PreStageResult run_prestage(const ExperimentConfig& cfg, std::uint64_t seed,
                            const std::string& dir) {
  fs::create_directories(dir);
  const std::string identity_path = dir + "/identity.txt";
  PreStageResult result;
  if (fs::exists(identity_path)) {
    result.identities = vae::read_identity_file(identity_path);
    return result;
  }
  const env::SpecEnvFactory factory(cfg.env);
  const auto data = vae::collect_pretraining_data(
      factory, cfg.vae_samples, cfg.hidden, util::derive_seed(seed, "vae-data"));
  result.samples = static_cast<long long>(data.size());

  vae::VaeConfig vcfg;
  vcfg.latent_dim = cfg.latent_dim;
  vcfg.epochs = cfg.vae_epochs;
  vcfg.batch_size = cfg.vae_batch;
  vcfg.learning_rate = cfg.vae_lr;
  const int n = cfg.env.num_agents();
  const int action_dim = env::action_dim(cfg.env);

  // Best of vae_restarts independent trainings. Selection criterion: mean
  // squared reward-prediction error with every agent's latent replaced by its
  // k-means cluster center. Downstream, agents in a cluster share one
  // subnetwork, so the centers must be sufficient identity statistics; a
  // restart whose latent space k-means can actually partition predicts
  // rewards well from centers alone, while one that encodes identity in a
  // non-clusterable layout does not. (The total training loss is dominated
  // by the much wider observation head and does not discriminate at all.)
  const int k = std::min(cfg.clusters > 0 ? cfg.clusters : cfg.env.num_types(),
                         n - 1);
  bool have = false;
  double best_center_mse = 0.0;
  for (int r = 0; r < cfg.vae_restarts; ++r) {
    const std::uint64_t rs = util::derive_seed(seed, "vae-restart", r);
    auto encoder = vae::make_encoder(n, vcfg, util::derive_seed(rs, "encoder"));
    auto decoder = vae::make_decoder(env::obs_dim(cfg.env), action_dim, vcfg,
                                     util::derive_seed(rs, "decoder"));
    const auto train_out = vae::train_vae(encoder, decoder, data, vcfg, n,
                                          action_dim,
                                          util::derive_seed(rs, "vae-train"));
    auto identities = vae::identity_vectors(encoder, n, cfg.latent_dim,
                                            vae::IdentityMode::kMean);

    std::vector<std::vector<double>> points(n);
    for (const auto& v : identities) points[v.agent] = v.z;
    const auto clusters =
        cluster::kmeans(points, k, util::derive_seed(rs, "select-kmeans"));

    const int obs_dim = env::obs_dim(cfg.env);
    std::vector<double> dec_in(decoder.input_dim(), 0.0);
    double center_mse = 0.0;
    for (const auto& sample : data) {
      const auto& z = clusters.centers[clusters.assignment[sample.agent]];
      std::copy(z.begin(), z.end(), dec_in.begin());
      std::copy(sample.obs.begin(), sample.obs.end(),
                dec_in.begin() + cfg.latent_dim);
      std::fill(dec_in.begin() + cfg.latent_dim + obs_dim, dec_in.end(), 0.0);
      dec_in[cfg.latent_dim + obs_dim + sample.action] = 1.0;
      const auto out = nn::forward(decoder, dec_in, nullptr);
      const double diff = out[obs_dim] - sample.reward;
      center_mse += diff * diff;
    }
    center_mse /= static_cast<double>(data.size());

    if (!have || center_mse < best_center_mse) {
      have = true;
      best_center_mse = center_mse;
      result.vae_losses = train_out.epoch_losses;
      result.identities = std::move(identities);
    }
  }
  vae::write_identity_file(identity_path, result.identities);
  {
    std::ofstream f(dir + "/vae_loss.txt", std::ios::trunc);
    for (const double loss : result.vae_losses) {
      f << util::fmt_double(loss) << '\n';
    }
  }
  return result;
}

RunRecord run_single(const ExperimentConfig& cfg,
                     const sharing::SharingStrategy& base_strategy,
                     std::uint64_t seed) {
  const sharing::SharingStrategy strategy = instantiate(cfg, base_strategy);
  RunRecord record;
  record.strategy = strategy.name();
  record.seed = seed;
  record.run_dir = run_dir_for(cfg, strategy.name(), seed);

  std::string stage = "setup";
  try {
    fs::create_directories(record.run_dir);
    const sharing::NetArchitecture arch = architecture_for(cfg);
    const int n = cfg.env.num_agents();
    const int types = cfg.env.num_types();

    std::optional<PreStageResult> pre;
    if (strategy.needs_identities()) {
      stage = "pretrain";
      pre = run_prestage(cfg, seed, record.run_dir);
      record.pretrain_samples = pre->samples;
    }

    stage = "bindings";
    sharing::Bindings bindings = sharing::build_bindings(
        strategy, n, types, arch, util::derive_seed(seed, "bindings"),
        pre ? &pre->identities : nullptr);
    sharing::write_binding_manifest(record.run_dir + "/bindings.txt", bindings);
    if (!bindings.masks.empty()) {
      cluster::write_mask_file(record.run_dir + "/masks.txt", bindings.masks);
    }
    record.relative_size = sharing::relative_model_size(
        strategy, arch, n, strategy.clusters > 0 ? strategy.clusters : types);

    stage = "train";
    record.metrics_path = record.run_dir + "/metrics.csv";
    {
      CsvMetricsSink sink(record.metrics_path, types);
      const env::SpecEnvFactory factory(cfg.env);
      rl::train(cfg.trainer, factory, bindings, seed, strategy.name(), &sink);
    }

    stage = "checkpoint";
    for (std::size_t s = 0; s < bindings.store.sets.size(); ++s) {
      nn::save_mlp(bindings.store.sets[s].actor,
                   record.run_dir + "/actor_" + std::to_string(s) + ".msl");
      nn::save_mlp(bindings.store.sets[s].critic,
                   record.run_dir + "/critic_" + std::to_string(s) + ".msl");
    }

    stage = "evaluate";
    std::optional<env::TrajectoryWriter> traj;
    if (cfg.dump_trajectories) {
      traj.emplace(record.run_dir + "/trajectories.txt");
    }
    const EvalResult eval =
        evaluate(bindings, cfg.env, cfg.eval_episodes,
                 util::derive_seed(seed, "eval"), traj ? &*traj : nullptr);
    record.final_return = eval.mean;
    {
      std::ofstream f(record.run_dir + "/eval.txt", std::ios::trunc);
      f << "mean " << util::fmt_double(eval.mean) << '\n';
      for (std::size_t t = 0; t < eval.per_type.size(); ++t) {
        f << "type " << t << ' ' << util::fmt_double(eval.per_type[t]) << '\n';
      }
      for (std::size_t i = 0; i < eval.per_agent.size(); ++i) {
        f << "agent " << i << ' ' << util::fmt_double(eval.per_agent[i]) << '\n';
      }
    }
  } catch (const std::exception& e) {
    record.failed_stage = stage;
    record.error = e.what();
  }
  return record;
}

RunReport run(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  save_config_file(cfg, cfg.out_dir + "/config.txt");

  struct Job {
    sharing::SharingStrategy strategy;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& s : cfg.strategies) {
    for (const auto seed : cfg.seeds) jobs.push_back({s, seed});
  }

  RunReport report;
  report.rows.resize(jobs.size());

  const int workers = std::min<int>(
      {cfg.parallel_jobs, thread_cap_from_env(), static_cast<int>(jobs.size())});
  if (workers <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      report.rows[j] = run_single(cfg, jobs[j].strategy, jobs[j].seed);
    }
  } else {
    std::mutex mu;
    std::size_t next = 0;
    auto worker = [&]() {
      while (true) {
        std::size_t j;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= jobs.size()) return;
          j = next++;
        }
        report.rows[j] = run_single(cfg, jobs[j].strategy, jobs[j].seed);
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Aggregate min/mean/max of the final return per strategy over seeds.
  for (const auto& s : cfg.strategies) {
    StrategySummary sum;
    sum.strategy = s.name();
    double lo = 0.0, hi = 0.0, acc = 0.0;
    for (const auto& row : report.rows) {
      if (row.strategy != sum.strategy || !row.ok()) continue;
      if (sum.runs == 0) {
        lo = hi = row.final_return;
      } else {
        lo = std::min(lo, row.final_return);
        hi = std::max(hi, row.final_return);
      }
      acc += row.final_return;
      sum.runs += 1;
    }
    if (sum.runs > 0) {
      sum.min_return = lo;
      sum.max_return = hi;
      sum.mean_return = acc / sum.runs;
    }
    report.summary.push_back(std::move(sum));
  }

  {
    std::ofstream f(cfg.out_dir + "/report.csv", std::ios::trunc);
    f << "strategy,seed,final_return,relative_size,pretrain_samples,"
         "metrics_csv,failed_stage\n";
    for (const auto& r : report.rows) {
      f << r.strategy << ',' << r.seed << ',' << util::fmt_double(r.final_return)
        << ',' << util::fmt_double_short(r.relative_size) << ','
        << r.pretrain_samples << ',' << r.metrics_path << ',' << r.failed_stage
        << '\n';
    }
  }
  {
    std::ofstream f(cfg.out_dir + "/summary.csv", std::ios::trunc);
    f << "strategy,min_return,mean_return,max_return,runs\n";
    for (const auto& s : report.summary) {
      f << s.strategy << ',' << util::fmt_double(s.min_return) << ','
        << util::fmt_double(s.mean_return) << ',' << util::fmt_double(s.max_return)
        << ',' << s.runs << '\n';
    }
  }
  return report;
}

sharing::Bindings load_bindings_dir(const std::string& dir) {
  sharing::Bindings b = sharing::read_binding_manifest(dir + "/bindings.txt");
  if (fs::exists(dir + "/masks.txt")) {
    b.masks = cluster::read_mask_file(dir + "/masks.txt");
  }
  for (std::size_t s = 0; s < b.store.sets.size(); ++s) {
    b.store.sets[s].actor =
        nn::load_mlp(dir + "/actor_" + std::to_string(s) + ".msl",
                     nn::Activation::kRelu, nn::OutputHead::kSoftmax);
    b.store.sets[s].critic =
        nn::load_mlp(dir + "/critic_" + std::to_string(s) + ".msl",
                     nn::Activation::kRelu, nn::OutputHead::kLinear);
    b.store.sets[s].actor_state = nn::RmsPropState::like(b.store.sets[s].actor);
    b.store.sets[s].critic_state = nn::RmsPropState::like(b.store.sets[s].critic);
  }
  return b;
}

}  // namespace maskshare::harness
