#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "laserprog/anomaly.hpp"
#include "laserprog/baselines.hpp"
#include "laserprog/rng.hpp"

using namespace laserprog;

namespace {

std::vector<Vec> points_1d(std::initializer_list<double> xs) {
  std::vector<Vec> out;
  for (double x : xs) out.push_back({x});
  return out;
}

// Definitional re-derivation of the local outlier factor, structured around
// explicit k-distance / reachability / density passes. Used to cross-check
// the library implementation point for point.
std::vector<double> oracle_lof(const std::vector<Vec>& pts, int k) {
  const std::size_t n = pts.size();
  auto d = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t i = 0; i < pts[a].size(); ++i) {
      s += (pts[a][i] - pts[b][i]) * (pts[a][i] - pts[b][i]);
    }
    return std::max(std::sqrt(s), 1e-12);
  };
  // k-distance of each point: k-th smallest distance to another point.
  std::vector<double> kdist(n);
  std::vector<std::vector<std::size_t>> nset(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> ds;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) ds.push_back(d(i, j));
    }
    std::nth_element(ds.begin(), ds.begin() + (k - 1), ds.end());
    kdist[i] = ds[static_cast<std::size_t>(k) - 1];
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && d(i, j) <= kdist[i]) nset[i].push_back(j);
    }
  }
  std::vector<double> lrd(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j : nset[i]) sum += std::max(kdist[j], d(i, j));
    lrd[i] = static_cast<double>(nset[i].size()) / sum;
  }
  std::vector<double> lof(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j : nset[i]) sum += lrd[j];
    lof[i] = sum / (static_cast<double>(nset[i].size()) * lrd[i]);
  }
  return lof;
}

std::vector<PowerWindow> constant_windows(int n, int seq_len) {
  std::vector<PowerWindow> ws;
  Rng rng(31);
  for (int i = 0; i < n; ++i) {
    PowerWindow w;
    const double level = 0.4 + 0.05 * (i % 4);
    w.values.assign(static_cast<std::size_t>(seq_len), level);
    for (double& v : w.values) v += uniform(rng, -0.01, 0.01);
    w.oc = {i % 2 ? 0.2 : 0.8, i % 3 ? 0.3 : 0.7};
    w.device_id = "t" + std::to_string(i);
    w.normalized = true;
    ws.push_back(std::move(w));
  }
  return ws;
}

NormStats unit_stats() {
  NormStats s;
  s.p_min = 0.0;
  s.p_max = 1.0;
  s.t_min = 0.0;
  s.t_max = 1.0;
  s.i_min = 0.0;
  s.i_max = 1.0;
  return s;
}

}  // namespace

TEST_CASE("lof_scores hand-derived line example") {
  // Points 0, 1, 2, 3 form an even chain; 10 is isolated. With k = 2 the
  // chain points all have LOF exactly 1 and the outlier exactly 5
  // (reachability sums 7 + 8 against chain density 2/3).
  auto lof = lof_scores(points_1d({0.0, 1.0, 2.0, 3.0, 10.0}), 2);
  REQUIRE(lof.size() == 5);
  for (int i = 0; i < 4; ++i) {
    CHECK(lof[static_cast<std::size_t>(i)] == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(lof[4] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("lof_scores symmetric configurations score exactly 1") {
  // Square corners: every point is equivalent by symmetry.
  std::vector<Vec> sq{{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {1.0, 1.0}};
  for (double v : lof_scores(sq, 2)) {
    CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("lof_scores uniform lattice interior is near 1, outlier far above") {
  std::vector<Vec> pts;
  for (int x = 0; x < 7; ++x) {
    for (int y = 0; y < 7; ++y) {
      pts.push_back({static_cast<double>(x), static_cast<double>(y)});
    }
  }
  pts.push_back({30.0, 30.0});
  auto lof = lof_scores(pts, 4);
  // interior lattice points (away from edges)
  for (int x = 2; x < 5; ++x) {
    for (int y = 2; y < 5; ++y) {
      CHECK(lof[static_cast<std::size_t>(x * 7 + y)] ==
            doctest::Approx(1.0).epsilon(0.05));
    }
  }
  CHECK(lof.back() > 2.0);
  CHECK(lof.back() > *std::max_element(lof.begin(), lof.end() - 1));
}

TEST_CASE("lof_scores matches the definitional oracle on random sets") {
  Rng rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 8 + static_cast<int>(uniform(rng, 0.0, 25.0));
    const int k = 1 + static_cast<int>(uniform(rng, 0.0, 5.0));
    std::vector<Vec> pts;
    for (int i = 0; i < n; ++i) {
      pts.push_back({uniform(rng, 0.0, 4.0), uniform(rng, 0.0, 4.0),
                     uniform(rng, 0.0, 4.0)});
    }
    const auto got = lof_scores(pts, k);
    const auto want = oracle_lof(pts, k);
    CAPTURE(trial);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("lof_scores rejects invalid k") {
  auto pts = points_1d({0.0, 1.0, 2.0});
  CHECK_THROWS_AS(lof_scores(pts, 0), DataError);
  CHECK_THROWS_AS(lof_scores(pts, 3), DataError);
  CHECK_THROWS_AS(lof_scores(pts, 7), DataError);
}

TEST_CASE("LofModel novelty scoring") {
  Rng rng(11);
  std::vector<Vec> ref;
  for (int i = 0; i < 60; ++i) {
    ref.push_back({uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)});
  }
  LofConfig cfg;
  cfg.k = 5;
  cfg.contamination = 0.1;
  LofModel m = LofModel::fit(ref, cfg);

  SUBCASE("threshold is the requested quantile of reference self-scores") {
    std::vector<double> self = lof_scores(ref, 5);
    std::sort(self.begin(), self.end());
    const std::size_t pos = static_cast<std::size_t>(
        std::floor(0.9 * static_cast<double>(ref.size())));
    CHECK(m.threshold() == self[std::min(ref.size() - 1, pos)]);
  }
  SUBCASE("inliers score near 1, novelties far above threshold") {
    CHECK(m.score({0.5, 0.5}) == doctest::Approx(1.0).epsilon(0.2));
    CHECK(m.score({8.0, 8.0}) > 3.0);
    CHECK(m.score({8.0, 8.0}) > m.threshold());
    CHECK(m.score({0.5, 0.5}) < m.score({2.0, 2.0}));
  }
  SUBCASE("k is clamped to n - 1") {
    LofConfig big;
    big.k = 1000;
    big.contamination = 0.5;
    std::vector<Vec> small(ref.begin(), ref.begin() + 8);
    LofModel sm = LofModel::fit(small, big);  // would throw if unclamped
    CHECK(sm.score({0.5, 0.5}) > 0.0);
  }
  SUBCASE("invalid configurations are rejected") {
    LofConfig bad;
    bad.contamination = 0.0;
    CHECK_THROWS_AS(LofModel::fit(ref, bad), DataError);
    bad.contamination = 1.0;
    CHECK_THROWS_AS(LofModel::fit(ref, bad), DataError);
    LofConfig ok;
    CHECK_THROWS_AS(LofModel::fit({{0.0, 0.0}}, ok), DataError);
  }
}

TEST_CASE("lof_features appends operating conditions to the window") {
  PowerWindow w;
  w.values = {0.1, 0.2, 0.3};
  w.oc = {0.25, 0.75};  // already normalized
  w.normalized = true;
  const Vec f = lof_features(w);
  CHECK(f == Vec{0.1, 0.2, 0.3, 0.25, 0.75});
  w.normalized = false;
  CHECK_THROWS_AS(lof_features(w), DataError);
}

TEST_CASE("gru_ae baseline is the non-variational autoencoder") {
  ScvaeConfig cfg;
  cfg.seq_len = 4;
  cfg.encoder_sizes = {6, 4};
  cfg.latent_dim = 3;
  cfg.oc_dim = 2;
  cfg.epochs = 120;
  cfg.learning_rate = 5e-3;
  cfg.batch_size = 4;
  cfg.seed = 3;
  auto ws = constant_windows(8, cfg.seq_len);
  TrainResult r = gru_ae_train(ws, cfg, unit_stats());

  SUBCASE("model is deterministic: no variational head, zero logvar") {
    CHECK_FALSE(r.model.cfg.variational);
    CHECK_FALSE(r.model.logvar_head.has_value());
    Vec mu, logvar;
    r.model.encode(ws[0].values, mu, logvar);
    for (double v : logvar) CHECK(v == 0.0);
  }
  SUBCASE("training reduces the loss and learns the windows") {
    CHECK(r.epoch_loss.back() < r.epoch_loss.front());
    CHECK(gru_ae_score(r.model, ws[0]) < 0.05);
  }
  SUBCASE("scoring agrees with the shared reconstruction-error path") {
    CHECK(gru_ae_score(r.model, ws[1]) == anomaly_score(r.model, ws[1]));
  }
  SUBCASE("retraining with the same seed is bitwise identical") {
    TrainResult r2 = gru_ae_train(ws, cfg, unit_stats());
    for (std::size_t i = 0; i < r.model.params.count(); ++i) {
      CHECK(r.model.params.at(i).value.a == r2.model.params.at(i).value.a);
    }
  }
  SUBCASE("variational models are rejected") {
    ScvaeConfig vcfg = cfg;
    vcfg.variational = true;
    vcfg.epochs = 1;
    TrainResult v = scvae_train(ws, vcfg, unit_stats());
    CHECK_THROWS_AS(gru_ae_score(v.model, ws[0]), DataError);
  }
}
