#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "laserprog/layers.hpp"
#include "laserprog/types.hpp"

namespace laserprog {

struct ScvaeConfig {
  int seq_len = 6;
  int input_dim = 1;
  std::vector<int> encoder_sizes{40, 20};
  int latent_dim = 8;
  int oc_dim = 2;  // 0 disables operating-condition conditioning
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 200;
  std::uint64_t seed = 1;
  double kl_weight = 1.0;
  // false drops the sampling path and KL term entirely, giving the
  // deterministic GRU autoencoder used as a baseline.
  bool variational = true;

  void validate() const;
};

struct LatentDraw {
  Vec mu, logvar, eps, z;
};

// z = mu + exp(0.5 logvar) o eps. Gradient flows to mu and logvar only.
Vec reparameterize(const Vec& mu, const Vec& logvar, const Vec& eps);

struct LossTerms {
  double recon = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

// recon = sum_t (x_t - xhat_t)^2; kl is the closed-form divergence of
// N(mu, exp(logvar)) from N(0, I); total = recon + kl_weight * kl.
LossTerms scvae_loss(const Vec& x, const Vec& xhat, const Vec& mu,
                     const Vec& logvar, double kl_weight);

// GRU encoder -> Gaussian latent heads -> decoder conditioned on [z | oc].
// The decoder maps [z | oc] through a dense layer to the initial state of
// the first (narrow) GRU layer, unrolls seq_len steps on a learned constant
// input, widens through the second GRU layer, and emits one power value per
// step through an identity dense head.
class ScvaeModel {
 public:
  ScvaeConfig cfg;
  NormStats norm;
  ParamSet params;

  std::vector<GruLayer> enc;
  DenseLayer mu_head;
  std::optional<DenseLayer> logvar_head;  // absent when !cfg.variational
  DenseLayer dec_init;
  std::vector<GruLayer> dec;
  DenseLayer out_head;
  std::size_t dec_const = 0;  // learned constant decoder input

  static ScvaeModel create(const ScvaeConfig& cfg, const NormStats& norm);

  // Deterministic; x is the normalized power sequence of length seq_len.
  // For a non-variational model logvar is all zeros.
  void encode(const Vec& x, Vec& mu, Vec& logvar) const;

  // Deterministic given (z, oc); oc normalized, size oc_dim.
  Vec decode(const Vec& z, const Vec& oc) const;

  // encode -> reparameterize -> decode. eps == nullptr takes the posterior
  // mean (the deterministic scoring path).
  Vec reconstruct(const Vec& x, const Vec& oc, const Vec* eps = nullptr) const;

  Vec oc_vector(const PowerWindow& w) const;

  void save(const std::string& path) const;
  static ScvaeModel load(const std::string& path);

  // Computes the per-sample loss and accumulates parameter gradients scaled
  // by `scale`. Exposed for gradient checking.
  LossTerms loss_and_grad(const Vec& x, const Vec& oc, const Vec& eps,
                          double scale);
  LossTerms forward_loss(const Vec& x, const Vec& oc, const Vec& eps) const;
};

struct TrainResult {
  ScvaeModel model;
  Vec epoch_loss;  // mean total loss per epoch
};

// Trains on normal-only normalized windows with shuffled mini-batches and
// one fresh eps draw per sample per visit. Throws DataError if any window
// is labeled degraded.
TrainResult scvae_train(const std::vector<PowerWindow>& train_windows,
                        const ScvaeConfig& cfg, const NormStats& norm);

}  // namespace laserprog
