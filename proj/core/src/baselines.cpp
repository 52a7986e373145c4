#include "laserprog/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "laserprog/anomaly.hpp"

namespace laserprog {

TrainResult gru_ae_train(const std::vector<PowerWindow>& train_windows,
                         ScvaeConfig cfg, const NormStats& norm) {
  cfg.variational = false;
  cfg.kl_weight = 0.0;
  return scvae_train(train_windows, cfg, norm);
}

double gru_ae_score(const ScvaeModel& model, const PowerWindow& window) {
  if (model.cfg.variational) {
    throw DataError("gru_ae_score: model is variational");
  }
  return anomaly_score(model, window);
}

namespace {

constexpr double kDistanceFloor = 1e-12;

double euclidean(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ShapeError("lof: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::max(std::sqrt(s), kDistanceFloor);
}

// k-distance and the k-nearest neighborhood (including distance ties).
struct Neighborhood {
  double kdist = 0.0;
  std::vector<std::size_t> members;
};

Neighborhood neighborhood(const std::vector<double>& dists,
                          std::size_t self_or_npos, int k) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < dists.size(); ++j) {
    if (j != self_or_npos) idx.push_back(j);
  }
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return dists[a] < dists[b]; });
  Neighborhood nb;
  nb.kdist = dists[idx[static_cast<std::size_t>(k) - 1]];
  for (std::size_t j : idx) {
    if (dists[j] <= nb.kdist) nb.members.push_back(j);
    else break;
  }
  return nb;
}

}  // namespace

std::vector<double> lof_scores(const std::vector<Vec>& points, int k) {
  const std::size_t n = points.size();
  if (k < 1 || static_cast<std::size_t>(k) >= n) {
    throw DataError("lof_scores: require 1 <= k < n");
  }

  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i][j] = dist[j][i] = euclidean(points[i], points[j]);
    }
  }

  std::vector<Neighborhood> nb(n);
  for (std::size_t i = 0; i < n; ++i) nb[i] = neighborhood(dist[i], i, k);

  std::vector<double> lrd(n);
  for (std::size_t i = 0; i < n; ++i) {
    double reach_sum = 0.0;
    for (std::size_t o : nb[i].members) {
      reach_sum += std::max(nb[o].kdist, dist[i][o]);
    }
    lrd[i] = static_cast<double>(nb[i].members.size()) / reach_sum;
  }

  std::vector<double> lof(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ratio_sum = 0.0;
    for (std::size_t o : nb[i].members) ratio_sum += lrd[o] / lrd[i];
    lof[i] = ratio_sum / static_cast<double>(nb[i].members.size());
  }
  return lof;
}

LofModel LofModel::fit(std::vector<Vec> reference, LofConfig cfg) {
  const std::size_t n = reference.size();
  if (n < 2) throw DataError("LofModel: need at least two reference points");
  if (cfg.contamination <= 0.0 || cfg.contamination >= 1.0) {
    throw DataError("LofModel: contamination must lie in (0, 1)");
  }
  LofModel m;
  m.k_ = std::min<int>(cfg.k, static_cast<int>(n) - 1);
  if (m.k_ < 1) throw DataError("LofModel: k must be >= 1");
  m.ref_ = std::move(reference);

  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i][j] = dist[j][i] = euclidean(m.ref_[i], m.ref_[j]);
    }
  }
  std::vector<Neighborhood> nb(n);
  m.kdist_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    nb[i] = neighborhood(dist[i], i, m.k_);
    m.kdist_[i] = nb[i].kdist;
  }
  m.lrd_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double reach_sum = 0.0;
    for (std::size_t o : nb[i].members) {
      reach_sum += std::max(nb[o].kdist, dist[i][o]);
    }
    m.lrd_[i] = static_cast<double>(nb[i].members.size()) / reach_sum;
  }

  std::vector<double> self = lof_scores(m.ref_, m.k_);
  std::sort(self.begin(), self.end());
  const double q = 1.0 - cfg.contamination;
  const std::size_t pos = std::min(
      n - 1, static_cast<std::size_t>(std::floor(q * static_cast<double>(n))));
  m.threshold_ = self[pos];
  return m;
}

double LofModel::score(const Vec& query) const {
  const std::size_t n = ref_.size();
  std::vector<double> dists(n);
  for (std::size_t i = 0; i < n; ++i) dists[i] = euclidean(query, ref_[i]);
  const Neighborhood nb =
      neighborhood(dists, std::numeric_limits<std::size_t>::max(), k_);
  double reach_sum = 0.0, lrd_sum = 0.0;
  for (std::size_t o : nb.members) {
    reach_sum += std::max(kdist_[o], dists[o]);
    lrd_sum += lrd_[o];
  }
  const double lrd_q = static_cast<double>(nb.members.size()) / reach_sum;
  return lrd_sum / static_cast<double>(nb.members.size()) / lrd_q;
}

Vec lof_features(const PowerWindow& w) {
  if (!w.normalized) throw DataError("lof_features: window not normalized");
  Vec f = w.values;
  f.push_back(w.oc.temperature_c);
  f.push_back(w.oc.current_ma);
  return f;
}

}  // namespace laserprog
