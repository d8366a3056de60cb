#include <cmath>
#include <filesystem>
#include <map>

#include "doctest.h"
#include "helpers.hpp"
#include "maskshare/env/env.hpp"
#include "maskshare/util/errors.hpp"
#include "maskshare/vae/identity_vae.hpp"

using namespace maskshare;

namespace {

std::vector<vae::TransitionSample> zero_dataset(int agents, int count, int obs_dim) {
  std::vector<vae::TransitionSample> data;
  for (int i = 0; i < count; ++i) {
    vae::TransitionSample s;
    s.agent = i % agents;
    s.obs.assign(obs_dim, 0.0);
    s.next_obs.assign(obs_dim, 0.0);
    s.action = 0;
    s.reward = 0.0;
    data.push_back(std::move(s));
  }
  return data;
}

void zero_out(nn::Mlp& net) {
  for (auto& w : net.weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : net.biases) std::fill(b.begin(), b.end(), 0.0);
}

}  // namespace

TEST_CASE("diagonal-Gaussian KL closed form") {
  // mu = 0, sigma^2 = 1 -> 0 exactly.
  CHECK(vae::gaussian_kl(std::vector<double>{0.0, 0.0},
                         std::vector<double>{0.0, 0.0}) == 0.0);
  // mu = (1,0), sigma^2 = (1,1) -> 0.5.
  CHECK(vae::gaussian_kl(std::vector<double>{1.0, 0.0},
                         std::vector<double>{0.0, 0.0}) ==
        doctest::Approx(0.5).epsilon(1e-15));
  // Always nonnegative; zero only at the prior.
  util::Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> mu = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const std::vector<double> lv = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const double kl = vae::gaussian_kl(mu, lv);
    CHECK(kl >= 0.0);
    if (mu[0] != 0.0 || mu[1] != 0.0 || lv[0] != 0.0 || lv[1] != 0.0) {
      CHECK(kl > 0.0);
    }
  }
}

TEST_CASE("perfect decoder predictions leave only the KL term") {
  vae::VaeConfig cfg;
  cfg.latent_dim = 2;
  const int agents = 3, obs_dim = 4, action_dim = 2;
  auto enc = vae::make_encoder(agents, cfg, 1);
  auto dec = vae::make_decoder(obs_dim, action_dim, cfg, 2);
  zero_out(dec);  // predicts exactly zero for o' and r

  const auto data = zero_dataset(agents, 6, obs_dim);
  util::Rng rng(7);
  const auto r = vae::elbo_loss(enc, dec, data, agents, action_dim, rng,
                                nullptr, nullptr);
  CHECK(r.reconstruction == 0.0);
  CHECK(r.loss == doctest::Approx(r.kl).epsilon(1e-15));
  CHECK(r.kl > 0.0);  // random encoder is not at the prior
}

TEST_CASE("elbo gradients match finite differences with shared noise") {
  vae::VaeConfig cfg;
  cfg.latent_dim = 2;
  cfg.encoder_hidden = {8};
  cfg.decoder_hidden = {8};
  const int agents = 3, obs_dim = 3, action_dim = 2;

  int instances = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto enc = vae::make_encoder(agents, cfg, seed);
    auto dec = vae::make_decoder(obs_dim, action_dim, cfg, seed + 1000);
    // Smooth decoder for valid finite differences.
    dec.hidden_activation = nn::Activation::kTanh;

    util::Rng data_rng(util::derive_seed(seed, "data"));
    std::vector<vae::TransitionSample> batch;
    for (int i = 0; i < 4; ++i) {
      vae::TransitionSample s;
      s.agent = i % agents;
      s.action = i % action_dim;
      s.reward = data_rng.uniform(-1, 1);
      for (int d = 0; d < obs_dim; ++d) {
        s.obs.push_back(data_rng.uniform(-1, 1));
        s.next_obs.push_back(data_rng.uniform(-1, 1));
      }
      batch.push_back(std::move(s));
    }

    const std::uint64_t eps_seed = util::derive_seed(seed, "eps");
    auto loss_fn = [&]() {
      util::Rng rng(eps_seed);  // identical eps sequence every evaluation
      return vae::elbo_loss(enc, dec, batch, agents, action_dim, rng, nullptr,
                            nullptr)
          .loss;
    };
    auto enc_grads = nn::GradientBuffer::like(enc);
    auto dec_grads = nn::GradientBuffer::like(dec);
    {
      util::Rng rng(eps_seed);
      vae::elbo_loss(enc, dec, batch, agents, action_dim, rng, &enc_grads,
                     &dec_grads);
    }
    CHECK(testutil::max_fd_gradient_error(enc, enc_grads, loss_fn) < 1e-5);
    CHECK(testutil::max_fd_gradient_error(dec, dec_grads, loss_fn) < 1e-5);
    ++instances;
  }
  CHECK(instances == 30);
}

TEST_CASE("encoder consumes exactly the one-hot agent index") {
  vae::VaeConfig cfg;
  const int agents = 5;
  const auto enc = vae::make_encoder(agents, cfg, 3);
  CHECK(enc.input_dim() == agents);  // no observation features enter
  CHECK(enc.output_dim() == 2 * cfg.latent_dim);
  // Identity vectors are a pure function of the index.
  const auto a = vae::identity_vector(enc, 2, agents, cfg.latent_dim,
                                      vae::IdentityMode::kMean);
  const auto b = vae::identity_vector(enc, 2, agents, cfg.latent_dim,
                                      vae::IdentityMode::kMean);
  CHECK(a.z == b.z);
  CHECK_THROWS_AS(vae::identity_vector(enc, agents, agents, cfg.latent_dim,
                                       vae::IdentityMode::kMean),
                  DimensionError);
}

TEST_CASE("zero-weight encoder maps every agent to the same identity") {
  vae::VaeConfig cfg;
  auto enc = vae::make_encoder(6, cfg, 4);
  zero_out(enc);
  const auto vectors =
      vae::identity_vectors(enc, 6, cfg.latent_dim, vae::IdentityMode::kMean);
  for (const auto& v : vectors) CHECK(v.z == vectors[0].z);
}

TEST_CASE("pretraining data is balanced within one partial step") {
  env::EnvSpec spec;
  spec.name = "bps";
  spec.agents_per_type = {3, 3, 3};
  const env::SpecEnvFactory factory(spec);

  SUBCASE("zero requested samples give an empty dataset") {
    CHECK(vae::collect_pretraining_data(factory, 0, {16}, 1).empty());
  }

  SUBCASE("9000 samples over 9 agents: exactly 1000 each") {
    const auto data = vae::collect_pretraining_data(factory, 9000, {16}, 1);
    CHECK(data.size() == 9000);
    std::map<int, int> counts;
    for (const auto& s : data) counts[s.agent] += 1;
    for (const auto& [agent, count] : counts) CHECK(count == 1000);
  }

  SUBCASE("non-divisible totals stay within +-1 step of balance") {
    const auto data = vae::collect_pretraining_data(factory, 9004, {16}, 1);
    CHECK(data.size() == 9004);
    std::map<int, int> counts;
    for (const auto& s : data) counts[s.agent] += 1;
    int lo = 1 << 30, hi = 0;
    for (const auto& [agent, count] : counts) {
      lo = std::min(lo, count);
      hi = std::max(hi, count);
    }
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("train_vae bookkeeping") {
  vae::VaeConfig cfg;
  cfg.latent_dim = 2;
  cfg.encoder_hidden = {8};
  cfg.decoder_hidden = {8};
  cfg.batch_size = 4;
  const int agents = 3, obs_dim = 2, action_dim = 2;
  auto enc = vae::make_encoder(agents, cfg, 1);
  auto dec = vae::make_decoder(obs_dim, action_dim, cfg, 2);
  const auto data = zero_dataset(agents, 12, obs_dim);

  SUBCASE("epochs = 0 leaves parameters unchanged and history empty") {
    cfg.epochs = 0;
    const auto w_before = enc.weights;
    const auto out = vae::train_vae(enc, dec, data, cfg, agents, action_dim, 0);
    CHECK(out.epoch_losses.empty());
    CHECK(enc.weights == w_before);
  }

  SUBCASE("loss history length equals the epoch count") {
    cfg.epochs = 5;
    const auto out = vae::train_vae(enc, dec, data, cfg, agents, action_dim, 0);
    CHECK(out.epoch_losses.size() == 5);
  }

  SUBCASE("training is deterministic per seed") {
    cfg.epochs = 3;
    auto enc2 = vae::make_encoder(agents, cfg, 1);
    auto dec2 = vae::make_decoder(obs_dim, action_dim, cfg, 2);
    const auto a = vae::train_vae(enc, dec, data, cfg, agents, action_dim, 11);
    const auto b = vae::train_vae(enc2, dec2, data, cfg, agents, action_dim, 11);
    CHECK(a.epoch_losses == b.epoch_losses);
    CHECK(enc.weights == enc2.weights);
  }
}

TEST_CASE("identity file round-trip") {
  std::vector<vae::IdentityVector> vectors;
  for (int i = 0; i < 4; ++i) {
    vectors.push_back({i, {0.125 * i, -1.5 + i}});
  }
  const auto path =
      std::filesystem::temp_directory_path() / "maskshare_identity_test.txt";
  vae::write_identity_file(path.string(), vectors);
  const auto loaded = vae::read_identity_file(path.string());
  REQUIRE(loaded.size() == vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    CHECK(loaded[i].agent == vectors[i].agent);
    CHECK(loaded[i].z == vectors[i].z);
  }
  std::filesystem::remove(path);
}
