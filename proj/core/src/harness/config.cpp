#include "maskshare/harness/config.hpp"

#include <fstream>
#include <sstream>

#include "maskshare/util/errors.hpp"
#include "maskshare/util/text.hpp"

namespace maskshare::harness {

void ExperimentConfig::validate() const {
  env.validate();
  if (strategies.empty()) throw ConfigError("strategy list is empty");
  if (seeds.empty()) throw ConfigError("seed list is empty");
  trainer.validate();
  if (hidden.empty()) throw ConfigError("hidden layer list is empty");
  if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (vae_epochs < 0) throw ConfigError("vae_epochs must be >= 0");
  if (vae_samples < 1) throw ConfigError("vae_samples must be >= 1");
  if (vae_restarts < 1) throw ConfigError("vae_restarts must be >= 1");
  if (lambda < 0.0 || lambda >= 1.0) throw ConfigError("lambda must be in [0,1)");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  if (parallel_jobs < 1) throw ConfigError("parallel_jobs must be >= 1");
}

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_seeds(const std::vector<std::uint64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_strategies(const std::vector<sharing::SharingStrategy>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += v[i].name();
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = util::trim(line);
    if (trimmed.empty()) continue;
    const std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = util::trim(trimmed.substr(0, eq));
    const std::string value = util::trim(trimmed.substr(eq + 1));

    if (key == "env") cfg.env.name = value;
    else if (key == "agents") cfg.env.agents_per_type = util::parse_int_list(value);
    else if (key == "horizon") cfg.env.horizon = static_cast<int>(util::parse_ll(value));
    else if (key == "env_seed") cfg.env.seed = static_cast<std::uint64_t>(util::parse_ll(value));
    else if (key == "grid") cfg.env.grid_size = static_cast<int>(util::parse_ll(value));
    else if (key == "foods") cfg.env.num_foods = static_cast<int>(util::parse_ll(value));
    else if (key == "move_step") cfg.env.move_step = util::parse_double(value);
    else if (key == "strategies") {
      cfg.strategies.clear();
      for (const auto& name : util::split(value, ',')) {
        if (util::trim(name).empty()) continue;
        cfg.strategies.push_back(sharing::SharingStrategy::parse(name));
      }
    } else if (key == "seeds") cfg.seeds = util::parse_u64_list(value);
    else if (key == "steps") cfg.trainer.total_env_steps = util::parse_ll(value);
    else if (key == "eval_interval") cfg.trainer.eval_interval = util::parse_ll(value);
    else if (key == "num_envs") cfg.trainer.num_envs = static_cast<int>(util::parse_ll(value));
    else if (key == "gamma") cfg.trainer.gamma = util::parse_double(value);
    else if (key == "n_steps") cfg.trainer.n_steps = static_cast<int>(util::parse_ll(value));
    else if (key == "lr") cfg.trainer.learning_rate = util::parse_double(value);
    else if (key == "entropy_coef") cfg.trainer.entropy_coef = util::parse_double(value);
    else if (key == "value_coef") cfg.trainer.value_coef = util::parse_double(value);
    else if (key == "grad_clip") cfg.trainer.grad_clip = util::parse_double(value);
    else if (key == "rmsprop_decay") cfg.trainer.rmsprop_decay = util::parse_double(value);
    else if (key == "rmsprop_eps") cfg.trainer.rmsprop_eps = util::parse_double(value);
    else if (key == "hidden") cfg.hidden = util::parse_int_list(value);
    else if (key == "latent_dim") cfg.latent_dim = static_cast<int>(util::parse_ll(value));
    else if (key == "vae_epochs") cfg.vae_epochs = static_cast<int>(util::parse_ll(value));
    else if (key == "vae_samples") cfg.vae_samples = util::parse_ll(value);
    else if (key == "vae_batch") cfg.vae_batch = static_cast<int>(util::parse_ll(value));
    else if (key == "vae_lr") cfg.vae_lr = util::parse_double(value);
    else if (key == "vae_restarts") cfg.vae_restarts = static_cast<int>(util::parse_ll(value));
    else if (key == "clusters") cfg.clusters = static_cast<int>(util::parse_ll(value));
    else if (key == "lambda") cfg.lambda = util::parse_double(value);
    else if (key == "snpps_drop_rate") cfg.snpps_drop_rate = util::parse_double(value);
    else if (key == "eval_episodes") cfg.eval_episodes = static_cast<int>(util::parse_ll(value));
    else if (key == "dump_trajectories") cfg.dump_trajectories = util::parse_ll(value) != 0;
    else if (key == "parallel_jobs") cfg.parallel_jobs = static_cast<int>(util::parse_ll(value));
    else if (key == "out") cfg.out_dir = value;
    else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "env = " << cfg.env.name << '\n';
  out << "agents = " << join_ints(cfg.env.agents_per_type) << '\n';
  out << "horizon = " << cfg.env.horizon << '\n';
  out << "env_seed = " << cfg.env.seed << '\n';
  out << "grid = " << cfg.env.grid_size << '\n';
  out << "foods = " << cfg.env.num_foods << '\n';
  out << "move_step = " << util::fmt_double(cfg.env.move_step) << '\n';
  out << "strategies = " << join_strategies(cfg.strategies) << '\n';
  out << "seeds = " << join_seeds(cfg.seeds) << '\n';
  out << "steps = " << cfg.trainer.total_env_steps << '\n';
  out << "eval_interval = " << cfg.trainer.eval_interval << '\n';
  out << "num_envs = " << cfg.trainer.num_envs << '\n';
  out << "gamma = " << util::fmt_double(cfg.trainer.gamma) << '\n';
  out << "n_steps = " << cfg.trainer.n_steps << '\n';
  out << "lr = " << util::fmt_double(cfg.trainer.learning_rate) << '\n';
  out << "entropy_coef = " << util::fmt_double(cfg.trainer.entropy_coef) << '\n';
  out << "value_coef = " << util::fmt_double(cfg.trainer.value_coef) << '\n';
  out << "grad_clip = " << util::fmt_double(cfg.trainer.grad_clip) << '\n';
  out << "rmsprop_decay = " << util::fmt_double(cfg.trainer.rmsprop_decay) << '\n';
  out << "rmsprop_eps = " << util::fmt_double(cfg.trainer.rmsprop_eps) << '\n';
  out << "hidden = " << join_ints(cfg.hidden) << '\n';
  out << "latent_dim = " << cfg.latent_dim << '\n';
  out << "vae_epochs = " << cfg.vae_epochs << '\n';
  out << "vae_samples = " << cfg.vae_samples << '\n';
  out << "vae_batch = " << cfg.vae_batch << '\n';
  out << "vae_lr = " << util::fmt_double(cfg.vae_lr) << '\n';
  out << "vae_restarts = " << cfg.vae_restarts << '\n';
  out << "clusters = " << cfg.clusters << '\n';
  out << "lambda = " << util::fmt_double(cfg.lambda) << '\n';
  out << "snpps_drop_rate = " << util::fmt_double(cfg.snpps_drop_rate) << '\n';
  out << "eval_episodes = " << cfg.eval_episodes << '\n';
  out << "dump_trajectories = " << (cfg.dump_trajectories ? 1 : 0) << '\n';
  out << "parallel_jobs = " << cfg.parallel_jobs << '\n';
  out << "out = " << cfg.out_dir << '\n';
  return out.str();
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

void save_config_file(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ConfigError("cannot open config file for writing: " + path);
  f << serialize_config(cfg);
}

}  // namespace maskshare::harness
