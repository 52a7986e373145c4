#pragma once

#include <vector>

#include "laserprog/scvae.hpp"

namespace laserprog {

// Deterministic GRU autoencoder: same encoder/decoder topology as the SCVAE
// but with a plain dense bottleneck (no sampling) and a pure sum-of-squares
// loss. Realized as the non-variational mode of ScvaeModel.
TrainResult gru_ae_train(const std::vector<PowerWindow>& train_windows,
                         ScvaeConfig cfg, const NormStats& norm);

double gru_ae_score(const ScvaeModel& model, const PowerWindow& window);

struct LofConfig {
  int k = 100;                 // neighborhood size, clamped to n - 1
  double contamination = 0.5;  // only used to derive a score threshold
};

// Classic LOF over a point set: each point is scored against the others.
std::vector<double> lof_scores(const std::vector<Vec>& points, int k);

// Novelty-style LOF: fit on (training) reference points, score queries
// against that reference set.
class LofModel {
 public:
  static LofModel fit(std::vector<Vec> reference, LofConfig cfg);
  double score(const Vec& query) const;
  // (1 - contamination) quantile of the reference self-scores.
  double threshold() const { return threshold_; }

 private:
  std::vector<Vec> ref_;
  std::vector<double> lrd_;  // local reachability density per reference point
  std::vector<double> kdist_;
  int k_ = 0;
  double threshold_ = 0.0;
};

// Feature vector for the LOF baseline: normalized window values followed by
// normalized operating conditions.
Vec lof_features(const PowerWindow& normalized_window);

}  // namespace laserprog
