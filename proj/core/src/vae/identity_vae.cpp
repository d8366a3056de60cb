#include "maskshare/vae/identity_vae.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "maskshare/nn/optim.hpp"
#include "maskshare/util/errors.hpp"
#include "maskshare/util/text.hpp"

namespace maskshare::vae {

namespace {

std::vector<int> with_ends(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes;
  sizes.reserve(hidden.size() + 2);
  sizes.push_back(in);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

void one_hot_into(std::vector<double>& dst, std::size_t offset, int index, int size) {
  for (int i = 0; i < size; ++i) dst[offset + i] = i == index ? 1.0 : 0.0;
}

int sample_categorical(std::span<const double> probs, util::Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

nn::Mlp make_encoder(int num_agents, const VaeConfig& cfg, std::uint64_t seed) {
  if (num_agents < 1) throw ConfigError("encoder needs >= 1 agent");
  nn::Mlp enc =
      nn::make_mlp(with_ends(num_agents, cfg.encoder_hidden, 2 * cfg.latent_dim),
                   nn::Activation::kTanh, nn::OutputHead::kLinear, seed);
  // Start the posterior narrow (sigma ~ e^{-2}) instead of at the prior's
  // sigma = 1: with unit noise on z the decoder cannot read the per-agent
  // means early in training and identity extraction becomes luck-dependent.
  for (int d = 0; d < cfg.latent_dim; ++d) {
    enc.biases.back()[cfg.latent_dim + d] = -4.0;
  }
  return enc;
}

nn::Mlp make_decoder(int obs_dim, int action_dim, const VaeConfig& cfg,
                     std::uint64_t seed) {
  const int in = cfg.latent_dim + obs_dim + action_dim;
  return nn::make_mlp(with_ends(in, cfg.decoder_hidden, obs_dim + 1),
                      nn::Activation::kRelu, nn::OutputHead::kLinear, seed);
}

std::vector<TransitionSample> collect_pretraining_data(
    const env::EnvFactory& factory, long long total_samples,
    const std::vector<int>& policy_hidden, std::uint64_t seed) {
  std::vector<TransitionSample> data;
  if (total_samples <= 0) return data;
  data.reserve(static_cast<std::size_t>(total_samples));

  auto env = factory.make();
  const int n = env->num_agents();

  // Fully shared stochastic policy, freshly initialized, no agent indication.
  nn::Mlp policy = nn::make_mlp(
      with_ends(env->obs_dim(), policy_hidden, env->action_dim()),
      nn::Activation::kRelu, nn::OutputHead::kSoftmax,
      util::derive_seed(seed, "pretrain-policy"));
  util::Rng act_rng(util::derive_seed(seed, "pretrain-actions"));

  std::uint64_t episode = 0;
  auto obs = env->reset(util::derive_seed(seed, "pretrain-episode", episode));
  std::vector<int> actions(n);
  long long collected = 0;
  while (collected < total_samples) {
    for (int i = 0; i < n; ++i) {
      const auto probs = nn::forward(policy, obs[i], nullptr);
      actions[i] = sample_categorical(probs, act_rng);
    }
    const auto result = env->step(actions);
    const long long take = std::min<long long>(n, total_samples - collected);
    for (int i = 0; i < take; ++i) {
      TransitionSample s;
      s.agent = i;
      s.obs = obs[i];
      s.action = actions[i];
      s.reward = result.rewards[i];
      s.next_obs = result.observations[i];
      data.push_back(std::move(s));
    }
    collected += take;
    if (result.done) {
      ++episode;
      obs = env->reset(util::derive_seed(seed, "pretrain-episode", episode));
    } else {
      obs = result.observations;
    }
  }
  return data;
}

double gaussian_kl(std::span<const double> mu, std::span<const double> logvar) {
  if (mu.size() != logvar.size()) throw DimensionError("KL argument size mismatch");
  double kl = 0.0;
  for (std::size_t d = 0; d < mu.size(); ++d) {
    kl += mu[d] * mu[d] + std::exp(logvar[d]) - logvar[d] - 1.0;
  }
  return 0.5 * kl;
}

ElboResult elbo_loss(const nn::Mlp& encoder, const nn::Mlp& decoder,
                     std::span<const TransitionSample> batch, int num_agents,
                     int action_dim, util::Rng& rng,
                     nn::GradientBuffer* encoder_grads,
                     nn::GradientBuffer* decoder_grads, double kl_scale) {
  if (batch.empty()) throw ContractError("elbo_loss on empty batch");
  const int m = encoder.output_dim() / 2;
  const int obs_dim = decoder.output_dim() - 1;
  if (decoder.input_dim() != m + obs_dim + action_dim) {
    throw DimensionError("decoder input dim inconsistent with (m, obs, action)");
  }

  ElboResult result;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> enc_in(num_agents, 0.0);
  std::vector<double> dec_in(decoder.input_dim());
  std::vector<double> eps(m);

  for (const auto& sample : batch) {
    if (sample.agent < 0 || sample.agent >= num_agents) {
      throw DimensionError("sample agent index out of range");
    }
    if (static_cast<int>(sample.obs.size()) != obs_dim ||
        static_cast<int>(sample.next_obs.size()) != obs_dim) {
      throw DimensionError("sample observation dims do not match decoder");
    }

    one_hot_into(enc_in, 0, sample.agent, num_agents);
    nn::ForwardTrace enc_trace;
    const auto enc_out = nn::forward(encoder, enc_in, nullptr, &enc_trace);
    const std::span<const double> mu(enc_out.data(), m);
    const std::span<const double> logvar(enc_out.data() + m, m);

    for (int d = 0; d < m; ++d) eps[d] = rng.normal();
    for (int d = 0; d < m; ++d) {
      dec_in[d] = mu[d] + std::exp(0.5 * logvar[d]) * eps[d];
    }
    std::copy(sample.obs.begin(), sample.obs.end(), dec_in.begin() + m);
    one_hot_into(dec_in, m + obs_dim, sample.action, action_dim);

    nn::ForwardTrace dec_trace;
    const auto dec_out = nn::forward(decoder, dec_in, nullptr, &dec_trace);

    double recon = 0.0;
    std::vector<double> dec_upstream(obs_dim + 1);
    for (int d = 0; d < obs_dim; ++d) {
      const double diff = dec_out[d] - sample.next_obs[d];
      recon += 0.5 * diff * diff;
      dec_upstream[d] = diff * inv_b;
    }
    const double rdiff = dec_out[obs_dim] - sample.reward;
    recon += 0.5 * rdiff * rdiff;
    dec_upstream[obs_dim] = rdiff * inv_b;

    const double kl = kl_scale * gaussian_kl(mu, logvar);
    result.reconstruction += recon * inv_b;
    result.kl += kl * inv_b;

    if (decoder_grads != nullptr || encoder_grads != nullptr) {
      std::vector<double> dec_input_grad;
      nn::GradientBuffer scratch;  // unused when decoder_grads given
      nn::GradientBuffer& dst = decoder_grads != nullptr
                                    ? *decoder_grads
                                    : (scratch = nn::GradientBuffer::like(decoder));
      nn::backward(decoder, dec_trace, nullptr, dec_upstream, dst,
                   encoder_grads != nullptr ? &dec_input_grad : nullptr);

      if (encoder_grads != nullptr) {
        // Chain through z = mu + exp(lv/2)*eps plus the closed-form KL terms.
        std::vector<double> enc_upstream(2 * m);
        for (int d = 0; d < m; ++d) {
          const double dz = dec_input_grad[d];
          enc_upstream[d] = dz + kl_scale * mu[d] * inv_b;
          enc_upstream[m + d] =
              dz * 0.5 * std::exp(0.5 * logvar[d]) * eps[d] +
              kl_scale * 0.5 * (std::exp(logvar[d]) - 1.0) * inv_b;
        }
        nn::backward(encoder, enc_trace, nullptr, enc_upstream, *encoder_grads);
      }
    }
  }
  result.loss = result.reconstruction + result.kl;
  if (!std::isfinite(result.loss)) throw NumericError("non-finite ELBO loss");
  return result;
}

VaeTrainResult train_vae(nn::Mlp& encoder, nn::Mlp& decoder,
                         std::span<const TransitionSample> data,
                         const VaeConfig& cfg, int num_agents, int action_dim,
                         std::uint64_t seed) {
  if (cfg.epochs > 0 && data.empty()) throw ContractError("train_vae on empty dataset");
  VaeTrainResult result;
  if (cfg.epochs <= 0) return result;

  util::Rng shuffle_rng(util::derive_seed(seed, "vae-shuffle"));
  util::Rng eps_rng(util::derive_seed(seed, "vae-eps"));
  auto enc_state = nn::RmsPropState::like(encoder);
  auto dec_state = nn::RmsPropState::like(decoder);
  auto enc_grads = nn::GradientBuffer::like(encoder);
  auto dec_grads = nn::GradientBuffer::like(decoder);

  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const int batch = std::max(1, cfg.batch_size);
  std::vector<TransitionSample> minibatch;
  minibatch.reserve(batch);
  // Dataset-level bound: each agent's posterior KL is charged once over all
  // of its transitions, i.e. 1/(samples per agent) per sample.
  const double kl_scale =
      static_cast<double>(num_agents) / static_cast<double>(data.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    long long batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      minibatch.clear();
      const std::size_t end = std::min(order.size(), start + batch);
      for (std::size_t k = start; k < end; ++k) minibatch.push_back(data[order[k]]);
      enc_grads.zero();
      dec_grads.zero();
      ElboResult r;
      try {
        r = elbo_loss(encoder, decoder, minibatch, num_agents, action_dim, eps_rng,
                      &enc_grads, &dec_grads, kl_scale);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch));
      }
      epoch_loss += r.loss;
      ++batches;
      nn::rmsprop_step(encoder, enc_grads, enc_state, cfg.learning_rate,
                       cfg.rmsprop_decay, cfg.rmsprop_eps);
      nn::rmsprop_step(decoder, dec_grads, dec_state, cfg.learning_rate,
                       cfg.rmsprop_decay, cfg.rmsprop_eps);
    }
    result.epoch_losses.push_back(epoch_loss / std::max<long long>(1, batches));
  }
  return result;
}

IdentityVector identity_vector(const nn::Mlp& encoder, int agent, int num_agents,
                               int latent_dim, IdentityMode mode, util::Rng* rng) {
  if (agent < 0 || agent >= num_agents) {
    throw DimensionError("agent index " + std::to_string(agent) +
                         " out of range [0," + std::to_string(num_agents) + ")");
  }
  std::vector<double> enc_in(num_agents, 0.0);
  enc_in[agent] = 1.0;
  const auto out = nn::forward(encoder, enc_in, nullptr);
  IdentityVector v;
  v.agent = agent;
  v.z.resize(latent_dim);
  for (int d = 0; d < latent_dim; ++d) {
    v.z[d] = out[d];
    if (mode == IdentityMode::kSample) {
      if (rng == nullptr) throw ContractError("sampling mode requires an Rng");
      v.z[d] += std::exp(0.5 * out[latent_dim + d]) * rng->normal();
    }
  }
  return v;
}

std::vector<IdentityVector> identity_vectors(const nn::Mlp& encoder, int num_agents,
                                             int latent_dim, IdentityMode mode,
                                             util::Rng* rng) {
  std::vector<IdentityVector> out;
  out.reserve(num_agents);
  for (int i = 0; i < num_agents; ++i) {
    out.push_back(identity_vector(encoder, i, num_agents, latent_dim, mode, rng));
  }
  return out;
}

void write_identity_file(const std::string& path,
                         const std::vector<IdentityVector>& vectors) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ContractError("cannot open identity file for writing: " + path);
  for (const auto& v : vectors) {
    f << v.agent;
    for (const double z : v.z) f << ' ' << util::fmt_double(z);
    f << '\n';
  }
}

std::vector<IdentityVector> read_identity_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ContractError("cannot open identity file: " + path);
  std::vector<IdentityVector> out;
  std::string line;
  while (std::getline(f, line)) {
    if (util::trim(line).empty()) continue;
    std::istringstream ss(line);
    IdentityVector v;
    ss >> v.agent;
    double z;
    while (ss >> z) v.z.push_back(z);
    if (ss.fail() && !ss.eof()) throw ContractError("bad identity line: " + line);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace maskshare::vae
