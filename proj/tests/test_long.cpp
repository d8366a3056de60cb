// Training-dependent checks: minutes-scale, registered under the `long` label.

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "helpers.hpp"
#include "maskshare/cluster/metrics.hpp"
#include "maskshare/harness/experiment.hpp"
#include "maskshare/nn/checkpoint.hpp"
#include "maskshare/rl/a2c.hpp"
#include "maskshare/util/rng.hpp"
#include "maskshare/vae/identity_vae.hpp"

using namespace maskshare;

TEST_CASE("bandit fixture: greedy-action probability exceeds 0.95 within 5k steps") {
  const testutil::BanditFactory factory;
  sharing::NetArchitecture arch;
  arch.obs_dim = 1;
  arch.action_dim = 3;
  arch.hidden = {16};
  auto bindings = sharing::build_bindings(sharing::SharingStrategy::parse("FuPS"),
                                          1, 1, arch, 0, nullptr);
  rl::TrainerConfig cfg;
  cfg.num_envs = 4;
  cfg.n_steps = 5;
  cfg.total_env_steps = 5000;
  cfg.eval_interval = 1000;
  cfg.learning_rate = 3e-3;
  cfg.gamma = 0.99;
  rl::train(cfg, factory, bindings, 1, "FuPS", nullptr);

  const std::vector<double> obs = {1.0};
  const auto probs =
      sharing::policy_forward(bindings.handles[0], bindings.store, bindings.masks, obs);
  CHECK(probs[1] > 0.95);  // action 1 is the analytic optimum
}

TEST_CASE("VAE separates two agent types with opposite reward signs") {
  // Synthetic regime: reward +1 for type 0 agents, -1 for type 1; transitions
  // carry no other signal, so the reward head forces identity into z.
  const int agents = 4, obs_dim = 2, action_dim = 2;
  std::vector<vae::TransitionSample> data;
  util::Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    vae::TransitionSample s;
    s.agent = i % agents;
    s.obs = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    s.next_obs = {0.0, 0.0};
    s.action = rng.uniform_int(action_dim);
    s.reward = s.agent < 2 ? 1.0 : -1.0;
    data.push_back(std::move(s));
  }
  vae::VaeConfig cfg;
  cfg.latent_dim = 2;
  cfg.epochs = 40;
  cfg.batch_size = 64;
  auto enc = vae::make_encoder(agents, cfg, 1);
  auto dec = vae::make_decoder(obs_dim, action_dim, cfg, 2);
  vae::train_vae(enc, dec, data, cfg, agents, action_dim, 5);

  const auto ids =
      vae::identity_vectors(enc, agents, cfg.latent_dim, vae::IdentityMode::kMean);
  auto mean_of = [&](int a, int b) {
    std::vector<double> m(2, 0.0);
    for (const int i : {a, b}) {
      m[0] += ids[i].z[0] / 2.0;
      m[1] += ids[i].z[1] / 2.0;
    }
    return m;
  };
  const auto m0 = mean_of(0, 1);
  const auto m1 = mean_of(2, 3);
  const double between = std::hypot(m0[0] - m1[0], m0[1] - m1[1]);
  double within = 0.0;
  for (const int i : {0, 1}) {
    within += std::hypot(ids[i].z[0] - m0[0], ids[i].z[1] - m0[1]) / 4.0;
  }
  for (const int i : {2, 3}) {
    within += std::hypot(ids[i].z[0] - m1[0], ids[i].z[1] - m1[1]) / 4.0;
  }
  CHECK(between > 3.0 * within);
}

TEST_CASE("bps desk run: same-type identity vectors cluster together (silhouette > 0)") {
  harness::ExperimentConfig cfg;
  cfg.env.name = "bps";
  cfg.env.agents_per_type = {3, 3, 3};
  cfg.vae_samples = 15000;
  cfg.vae_epochs = 25;
  cfg.hidden = {32, 32};
  const std::string dir =
      (std::filesystem::temp_directory_path() / "maskshare_test_silhouette").string();
  std::filesystem::remove_all(dir);
  const auto pre = harness::run_prestage(cfg, 0, dir);

  std::vector<std::vector<double>> points;
  std::vector<int> truth;
  for (const auto& v : pre.identities) {
    points.push_back(v.z);
    truth.push_back(v.agent / 3);  // contiguous type blocks
  }
  CHECK(cluster::silhouette_score(points, truth) > 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("AdaPS training touches no parameter of an everywhere-masked neuron") {
  harness::ExperimentConfig cfg;
  cfg.env.name = "bps";
  cfg.env.agents_per_type = {2, 2};
  cfg.env.horizon = 10;
  cfg.hidden = {24, 24};
  cfg.lambda = 0.2;
  cfg.vae_samples = 500;
  cfg.vae_epochs = 2;

  const std::string dir =
      (std::filesystem::temp_directory_path() / "maskshare_test_maskrespect").string();
  std::filesystem::remove_all(dir);
  const auto pre = harness::run_prestage(cfg, 1, dir);
  const auto arch = harness::architecture_for(cfg);
  auto strategy = sharing::SharingStrategy::parse("AdaPS");
  strategy.clusters = 2;
  auto bindings = sharing::build_bindings(strategy, 4, 2, arch,
                                          util::derive_seed(1, "bindings"),
                                          &pre.identities);
  const auto dead = testutil::neurons_masked_everywhere(bindings.masks);
  std::size_t dead_count = 0;
  for (const auto& layer : dead) dead_count += layer.size();
  REQUIRE(dead_count > 0);  // the check must not be vacuous

  const nn::Mlp actor_before = bindings.store.sets[0].actor;
  const nn::Mlp critic_before = bindings.store.sets[0].critic;

  rl::TrainerConfig tcfg;
  tcfg.num_envs = 2;
  tcfg.total_env_steps = 2000;
  tcfg.eval_interval = 1000;
  const env::SpecEnvFactory factory(cfg.env);
  rl::train(tcfg, factory, bindings, 1, "AdaPS", nullptr);

  CHECK(testutil::masked_params_untouched(actor_before,
                                          bindings.store.sets[0].actor, dead));
  CHECK(testutil::masked_params_untouched(critic_before,
                                          bindings.store.sets[0].critic, dead));
  // And some trainable parameter did move.
  CHECK(nn::serialize_mlp(bindings.store.sets[0].actor) !=
        nn::serialize_mlp(actor_before));
  std::filesystem::remove_all(dir);
}

TEST_CASE("frozen mapping network bytes are identical before and after training") {
  harness::ExperimentConfig cfg;
  cfg.env.name = "bps";
  cfg.env.agents_per_type = {2, 2};
  cfg.env.horizon = 10;
  cfg.hidden = {16, 16};
  cfg.vae_samples = 300;
  cfg.vae_epochs = 1;
  const std::string dir =
      (std::filesystem::temp_directory_path() / "maskshare_test_frozen").string();
  std::filesystem::remove_all(dir);
  const auto pre = harness::run_prestage(cfg, 2, dir);
  auto strategy = sharing::SharingStrategy::parse("AdaPS");
  strategy.clusters = 2;
  auto bindings = sharing::build_bindings(strategy, 4, 2,
                                          harness::architecture_for(cfg),
                                          util::derive_seed(2, "bindings"),
                                          &pre.identities);
  const auto bytes_before = bindings.masks.mapping_bytes;

  rl::TrainerConfig tcfg;
  tcfg.num_envs = 2;
  tcfg.total_env_steps = 1000;
  tcfg.eval_interval = 500;
  const env::SpecEnvFactory factory(cfg.env);
  rl::train(tcfg, factory, bindings, 2, "AdaPS", nullptr);

  CHECK(bindings.masks.mapping_bytes == bytes_before);
  const auto rebuilt = cluster::make_mapping_network(cfg.latent_dim, cfg.hidden,
                                                     bindings.masks.seed);
  CHECK(nn::serialize_mlp(rebuilt.net) == bindings.masks.mapping_bytes);
  std::filesystem::remove_all(dir);
}
