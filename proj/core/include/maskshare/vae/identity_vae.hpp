#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maskshare/env/env.hpp"
#include "maskshare/nn/mlp.hpp"
#include "maskshare/util/rng.hpp"

namespace maskshare::vae {

struct VaeConfig {
  int latent_dim = 2;
  std::vector<int> encoder_hidden = {64, 64};  // tanh
  std::vector<int> decoder_hidden = {64, 64};  // relu
  int epochs = 30;
  int batch_size = 128;
  double learning_rate = 1e-3;
  double rmsprop_decay = 0.99;
  double rmsprop_eps = 1e-8;
};

struct TransitionSample {
  int agent = 0;
  std::vector<double> obs;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_obs;
};

struct IdentityVector {
  int agent = 0;
  std::vector<double> z;
};

// Encoder q(z|i): one-hot agent index -> (mu, log sigma^2), output length 2m.
// Only the agent's index enters; no observation or action features.
nn::Mlp make_encoder(int num_agents, const VaeConfig& cfg, std::uint64_t seed);

// Decoder p(tr|z): (z, o_t, one-hot a_t) -> (o_{t+1} prediction, r_t prediction).
nn::Mlp make_decoder(int obs_dim, int action_dim, const VaeConfig& cfg,
                     std::uint64_t seed);

// Gathers transitions with a freshly initialized fully-shared policy acting
// stochastically (no agent indication). `total_samples` counts transitions;
// every env step contributes one sample per agent, so per-agent counts are
// balanced within one partial step. total_samples == 0 yields an empty set.
std::vector<TransitionSample> collect_pretraining_data(
    const env::EnvFactory& factory, long long total_samples,
    const std::vector<int>& policy_hidden, std::uint64_t seed);

struct ElboResult {
  double loss = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
};

// Closed-form KL( N(mu, diag sigma^2) || N(0, I) ) with sigma^2 = exp(logvar):
//   0.5 * sum_d (mu_d^2 + exp(lv_d) - lv_d - 1)
double gaussian_kl(std::span<const double> mu, std::span<const double> logvar);

// One evidence-lower-bound evaluation over a batch. Per sample:
//   z    = mu + exp(logvar/2) * eps,  eps ~ N(0, I) drawn from `rng`
//   loss = 0.5*|o_next_hat - o_next|^2 + 0.5*(r_hat - r)^2
//          + kl_scale * KL(mu, logvar)
// (unit-variance Gaussian likelihoods; the additive constant is dropped).
// Batch loss is the sample mean. Gradients are exact for the drawn eps and
// ACCUMULATE into the optional buffers.
//
// kl_scale = 1 charges the full posterior KL on every transition (the
// single-transition bound). The identity model has ONE latent per agent
// shared by all of that agent's transitions, so the bound on the whole
// dataset's evidence charges each agent's KL once; train_vae realizes that
// by amortizing, kl_scale = num_agents / dataset_size.
ElboResult elbo_loss(const nn::Mlp& encoder, const nn::Mlp& decoder,
                     std::span<const TransitionSample> batch, int num_agents,
                     int action_dim, util::Rng& rng,
                     nn::GradientBuffer* encoder_grads,
                     nn::GradientBuffer* decoder_grads, double kl_scale = 1.0);

struct VaeTrainResult {
  std::vector<double> epoch_losses;  // one mean loss per epoch
};

// Minibatch RMSProp on encoder+decoder; deterministic per seed. Reports the
// failing epoch index if the loss diverges to a non-finite value.
VaeTrainResult train_vae(nn::Mlp& encoder, nn::Mlp& decoder,
                         std::span<const TransitionSample> data,
                         const VaeConfig& cfg, int num_agents, int action_dim,
                         std::uint64_t seed);

enum class IdentityMode { kMean, kSample };

// kMean returns the posterior mean (deterministic); kSample draws one
// reparameterized sample from `rng`.
IdentityVector identity_vector(const nn::Mlp& encoder, int agent, int num_agents,
                               int latent_dim, IdentityMode mode,
                               util::Rng* rng = nullptr);
std::vector<IdentityVector> identity_vectors(const nn::Mlp& encoder,
                                             int num_agents, int latent_dim,
                                             IdentityMode mode,
                                             util::Rng* rng = nullptr);

// Identity artifact file: one line per agent, "index z_0 ... z_{m-1}".
void write_identity_file(const std::string& path,
                         const std::vector<IdentityVector>& vectors);
std::vector<IdentityVector> read_identity_file(const std::string& path);

}  // namespace maskshare::vae
