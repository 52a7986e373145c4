#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "laserprog/anomaly.hpp"
#include "laserprog/rng.hpp"
#include "laserprog/scvae.hpp"

using namespace laserprog;

namespace {

ScvaeModel tiny_model() {
  ScvaeConfig cfg;
  cfg.seq_len = 4;
  cfg.encoder_sizes = {3, 2};
  cfg.latent_dim = 2;
  cfg.oc_dim = 2;
  cfg.seed = 7;
  NormStats norm;
  norm.p_min = 0.0;
  norm.p_max = 1.0;
  norm.t_min = 60.0;
  norm.t_max = 100.0;
  norm.i_min = 10.0;
  norm.i_max = 20.0;
  return ScvaeModel::create(cfg, norm);
}

PowerWindow make_window(Vec values) {
  PowerWindow w;
  w.values = std::move(values);
  w.oc = {80.0, 15.0};
  w.device_id = "w";
  w.normalized = true;
  return w;
}

std::vector<ScoredWindow> scored(std::vector<std::pair<double, bool>> v) {
  std::vector<ScoredWindow> out;
  for (auto [s, p] : v) out.push_back({s, p});
  return out;
}

// Exhaustive reference: evaluates F1 on a dense threshold grid that brackets
// every achievable confusion table and returns the best (f1, threshold) with
// the smallest-threshold tie break, mirroring the calibration contract.
std::pair<double, double> exhaustive_best_f1(
    const std::vector<ScoredWindow>& sw) {
  std::set<double> distinct;
  for (const auto& s : sw) distinct.insert(s.score);
  std::vector<double> xs(distinct.begin(), distinct.end());
  std::vector<double> grid;
  if (xs.front() > 0.0) grid.push_back(xs.front() / 2.0);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    grid.push_back((xs[i] + xs[i + 1]) / 2.0);
  }
  if (xs.size() > 1 || grid.empty()) grid.push_back(xs.back());
  double best_f1 = -1.0, best_t = 0.0;
  for (double t : grid) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& s : sw) {
      if (s.score > t) {
        (s.positive ? tp : fp)++;
      } else if (s.positive) {
        fn++;
      }
    }
    const double p = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double r = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
    const double f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return {best_f1, best_t};
}

// O(n_pos * n_neg) probability that a positive outranks a negative,
// counting ties as one half.
double pairwise_auc(const std::vector<ScoredWindow>& sw) {
  double num = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& p : sw) {
    if (!p.positive) continue;
    n_pos++;
    for (const auto& n : sw) {
      if (n.positive) continue;
      if (p.score > n.score) num += 1.0;
      if (p.score == n.score) num += 0.5;
    }
  }
  for (const auto& n : sw) {
    if (!n.positive) n_neg++;
  }
  return num / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

TEST_CASE("metrics from confusion counts") {
  SUBCASE("published operating point") {
    // 922 true positives, 13 false positives, 78 false negatives.
    Metrics m = metrics({922, 987, 13, 78});
    CHECK(m.precision == doctest::Approx(922.0 / 935.0).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(0.922).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(2.0 * (922.0 / 935.0) * 0.922 /
                                  (922.0 / 935.0 + 0.922))
                      .epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(0.953).epsilon(1e-3));
    CHECK(m.fdr_paper == doctest::Approx(13.0 / 935.0).epsilon(1e-12));
    CHECK(m.fpr == doctest::Approx(13.0 / 1000.0).epsilon(1e-12));
    CHECK_FALSE(m.degenerate);
  }
  SUBCASE("perfect classifier") {
    Metrics m = metrics({10, 20, 0, 0});
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.fpr == 0.0);
    CHECK_FALSE(m.degenerate);
  }
  SUBCASE("no predicted positives is degenerate") {
    Metrics m = metrics({0, 20, 0, 5});
    CHECK(m.precision == 0.0);
    CHECK(m.f1 == 0.0);
    CHECK(m.degenerate);
  }
  SUBCASE("no true positives in data is degenerate") {
    Metrics m = metrics({0, 20, 3, 0});
    CHECK(m.recall == 0.0);
    CHECK(m.degenerate);
  }
}

TEST_CASE("detect uses a strict threshold") {
  CHECK(detect(0.013, 0.013) == Label::normal);
  CHECK(detect(0.0500001, 0.013) == Label::degraded);
  CHECK(detect(0.0129999, 0.013) == Label::normal);
  CHECK_THROWS_AS(detect(0.5, 0.0), DataError);
  CHECK_THROWS_AS(detect(0.5, -1.0), DataError);
}

TEST_CASE("classify_type splits on both thresholds") {
  Thresholds t;
  t.alpha = 0.013;
  t.beta = 0.1;
  CHECK(classify_type(0.005, t) == TypeDecision::normal);
  CHECK(classify_type(0.013, t) == TypeDecision::normal);   // boundary
  CHECK(classify_type(0.05, t) == TypeDecision::gradual);
  CHECK(classify_type(0.1, t) == TypeDecision::gradual);    // boundary
  CHECK(classify_type(0.2, t) == TypeDecision::sudden);

  Thresholds bad;
  bad.alpha = 0.2;
  bad.beta = 0.1;
  CHECK_THROWS_AS(classify_type(0.05, bad), DataError);
  bad.alpha = 0.0;
  bad.beta = 0.1;
  CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("anomaly_score is the squared reconstruction error") {
  ScvaeModel m = tiny_model();

  SUBCASE("zero parameters reconstruct zero, score is sum of squares") {
    for (std::size_t i = 0; i < m.params.count(); ++i) {
      for (double& v : m.params.at(i).value.a) v = 0.0;
    }
    PowerWindow w = make_window({0.5, 0.25, 1.0, 0.0});
    CHECK(anomaly_score(m, w) ==
          doctest::Approx(0.25 + 0.0625 + 1.0).epsilon(1e-12));
  }
  SUBCASE("deterministic path is bitwise repeatable") {
    PowerWindow w = make_window({0.4, 0.5, 0.6, 0.7});
    const double a = anomaly_score(m, w);
    const double b = anomaly_score(m, w);
    CHECK(a == b);
    CHECK(a >= 0.0);
  }
  SUBCASE("matches an explicit reconstruct call") {
    PowerWindow w = make_window({0.4, 0.5, 0.6, 0.7});
    const Vec xhat = m.reconstruct(w.values, m.oc_vector(w), nullptr);
    double e = 0.0;
    for (std::size_t i = 0; i < xhat.size(); ++i) {
      e += (w.values[i] - xhat[i]) * (w.values[i] - xhat[i]);
    }
    CHECK(anomaly_score(m, w) == doctest::Approx(e).epsilon(1e-15));
  }
  SUBCASE("rejects raw windows") {
    PowerWindow w = make_window({0.4, 0.5, 0.6, 0.7});
    w.normalized = false;
    CHECK_THROWS_AS(anomaly_score(m, w), DataError);
    PowerWindow big = make_window({0.4, 0.5, 0.6, 1.7});
    CHECK_THROWS_AS(anomaly_score(m, big), DataError);
  }
  SUBCASE("sampled variant is seeded and reproducible") {
    PowerWindow w = make_window({0.4, 0.5, 0.6, 0.7});
    Rng r1(99), r2(99);
    CHECK(anomaly_score_sampled(m, w, r1) == anomaly_score_sampled(m, w, r2));
  }
}

TEST_CASE("calibrate_alpha on hand-built score sets") {
  SUBCASE("perfectly separated scores") {
    auto sw = scored({{0.1, false}, {0.2, false}, {0.3, true}, {0.4, true}});
    CalibrationResult r = calibrate_alpha(sw);
    // candidates: 0.05, 0.15, 0.25, 0.35, 0.4; F1 = 1 first reached at 0.25
    CHECK(r.threshold == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(r.info.f1 == doctest::Approx(1.0));
    CHECK(r.info.precision == doctest::Approx(1.0));
    CHECK(r.info.recall == doctest::Approx(1.0));
    CHECK(r.info.n_candidates == 5);
    CHECK(r.sweep.size() == 5);
  }
  SUBCASE("overlapping scores trade precision for recall") {
    // negatives 0.1, 0.3; positives 0.25, 0.4.
    auto sw = scored({{0.1, false}, {0.3, false}, {0.25, true}, {0.4, true}});
    CalibrationResult r = calibrate_alpha(sw);
    // at 0.175: tp=2 fp=1 -> F1 = 0.8; no threshold does better.
    CHECK(r.threshold == doctest::Approx(0.175).epsilon(1e-12));
    CHECK(r.info.f1 == doctest::Approx(0.8).epsilon(1e-12));
  }
  SUBCASE("tie broken toward the smallest threshold") {
    auto sw = scored({{1.0, false}, {2.0, true}, {3.0, true}});
    CalibrationResult r = calibrate_alpha(sw);
    CHECK(r.threshold == doctest::Approx(1.5).epsilon(1e-12));
  }
  SUBCASE("minimum-precision mode maximizes recall under the constraint") {
    // negatives 1, 2, 3; positives 2.5, 3.5, 4.5.
    auto sw = scored({{1.0, false}, {2.0, false}, {3.0, false},
                      {2.5, true}, {3.5, true}, {4.5, true}});
    CalibrationResult f1_mode = calibrate_alpha(sw);
    CalibrationResult strict = calibrate_alpha(sw, 1.0);
    CHECK(strict.info.precision == doctest::Approx(1.0));
    CHECK(strict.threshold > f1_mode.threshold);
    // recall 2/3 at threshold 3.25 beats recall 1/3 past 3.5.
    CHECK(strict.info.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("unattainable precision falls back to the F1 rule") {
    auto sw = scored({{2.0, false}, {1.0, true}});  // inverted ordering
    CalibrationResult fallback = calibrate_alpha(sw, 0.999);
    CalibrationResult plain = calibrate_alpha(sw);
    CHECK(fallback.threshold == plain.threshold);
  }
  SUBCASE("single-label inputs are rejected") {
    CHECK_THROWS_AS(calibrate_alpha(scored({{0.1, true}, {0.2, true}})),
                    DataError);
    CHECK_THROWS_AS(calibrate_alpha(scored({{0.1, false}})), DataError);
  }
}

TEST_CASE("calibrate_alpha agrees with exhaustive search on random sets") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + static_cast<int>(uniform(rng, 0.0, 38.0));
    std::vector<ScoredWindow> sw;
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      // Coarse grid deliberately produces ties between scores.
      const double s = std::floor(uniform(rng, 0.0, 12.0)) / 10.0;
      const bool pos = uniform(rng, 0.0, 1.0) < 0.5;
      sw.push_back({s, pos});
      (pos ? has_pos : has_neg) = true;
    }
    if (!has_pos) sw.push_back({1.3, true});
    if (!has_neg) sw.push_back({0.05, false});
    const auto [best_f1, best_t] = exhaustive_best_f1(sw);
    CalibrationResult r = calibrate_alpha(sw);
    CAPTURE(trial);
    CHECK(r.info.f1 == doctest::Approx(best_f1).epsilon(1e-12));
    CHECK(r.threshold == doctest::Approx(best_t).epsilon(1e-12));
  }
}

TEST_CASE("calibrate_beta is constrained above alpha") {
  // gradual (negative) 0.02, 0.05; sudden (positive) 0.15, 0.3.
  auto sw = scored({{0.02, false}, {0.05, false}, {0.15, true}, {0.3, true}});

  SUBCASE("finds the separating threshold") {
    CalibrationResult r = calibrate_beta(sw, 0.013);
    CHECK(r.threshold == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.info.f1 == doctest::Approx(1.0));
  }
  SUBCASE("candidates at or below alpha are discarded") {
    // With alpha = 0.12 the perfect split at 0.1 is unavailable; the best
    // remaining candidate is the midpoint 0.225 (loses one sudden window).
    CalibrationResult r = calibrate_beta(sw, 0.12);
    CHECK(r.threshold > 0.12);
    CHECK(r.info.f1 < 1.0);
  }
  SUBCASE("throws when every candidate sits at or below alpha") {
    CHECK_THROWS_AS(calibrate_beta(sw, 10.0), DataError);
  }
  SUBCASE("requires both kinds") {
    CHECK_THROWS_AS(calibrate_beta(scored({{0.1, true}, {0.2, true}}), 0.01),
                    DataError);
    CHECK_THROWS_AS(calibrate_beta(scored({{0.1, false}}), 0.01), DataError);
  }
}

TEST_CASE("roc_auc") {
  SUBCASE("hand-checked half-crossed ordering") {
    auto sw = scored({{0.8, true}, {0.4, true}, {0.6, false}, {0.2, false}});
    RocResult r = roc_auc(sw);
    CHECK(r.auc_pairwise == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(r.auc == doctest::Approx(0.75).epsilon(1e-12));
    // sweep: (0,0) then one point per distinct score, ending at (1,1).
    CHECK(r.points.size() == 5);
    CHECK(r.points.front().fpr == 0.0);
    CHECK(r.points.front().tpr == 0.0);
    CHECK(r.points.back().fpr == doctest::Approx(1.0));
    CHECK(r.points.back().tpr == doctest::Approx(1.0));
  }
  SUBCASE("perfect separation gives unit area") {
    auto sw = scored({{0.9, true}, {0.8, true}, {0.1, false}});
    RocResult r = roc_auc(sw);
    CHECK(r.auc == doctest::Approx(1.0));
    CHECK(r.auc_pairwise == doctest::Approx(1.0));
  }
  SUBCASE("all scores tied gives chance area") {
    auto sw = scored({{0.5, true}, {0.5, false}, {0.5, true}, {0.5, false}});
    RocResult r = roc_auc(sw);
    CHECK(r.auc == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.auc_pairwise == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("trapezoid equals the pairwise statistic on random sets") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<ScoredWindow> sw;
      for (int i = 0; i < 40; ++i) {
        const double s = std::floor(uniform(rng, 0.0, 20.0)) / 19.0;
        sw.push_back({s, uniform(rng, 0.0, 1.0) < 0.4});
      }
      sw.push_back({0.31, true});
      sw.push_back({0.29, false});
      RocResult r = roc_auc(sw);
      CHECK(std::abs(r.auc - r.auc_pairwise) < 1e-9);
      CHECK(std::abs(r.auc - pairwise_auc(sw)) < 1e-12);
    }
  }
  SUBCASE("single-label input is rejected") {
    CHECK_THROWS_AS(roc_auc(scored({{0.1, true}, {0.2, true}})), DataError);
    CHECK_THROWS_AS(roc_auc(scored({{0.1, false}})), DataError);
  }
}

TEST_CASE("score_hash is order- and value-sensitive") {
  auto a = scored({{0.1, false}, {0.2, true}});
  auto b = scored({{0.2, true}, {0.1, false}});
  auto c = scored({{0.1, false}, {0.2, false}});
  CHECK(score_hash(a) != score_hash(b));
  CHECK(score_hash(a) != score_hash(c));
  CHECK(score_hash(a) == score_hash(scored({{0.1, false}, {0.2, true}})));
}

TEST_CASE("evaluate aggregates counts consistently") {
  ScvaeModel m = tiny_model();
  Thresholds t;
  t.alpha = 1e-4;
  t.beta = 0.5;

  Rng rng(5);
  std::vector<PowerWindow> ws;
  for (int i = 0; i < 24; ++i) {
    Vec v(4);
    for (double& x : v) x = uniform(rng, 0.0, 1.0);
    PowerWindow w = make_window(std::move(v));
    w.device_id = "d" + std::to_string(i);
    if (i % 3 != 0) {
      w.label = Label::degraded;
      w.kind = (i % 3 == 1) ? Kind::gradual : Kind::sudden;
    }
    ws.push_back(std::move(w));
  }
  EvalReport rep = evaluate(m, ws, t);

  CHECK(rep.counts.total() == ws.size());
  CHECK(rep.verdicts.size() == ws.size());
  const std::size_t degraded =
      rep.counts.tp + rep.counts.fn;  // truth positives
  CHECK(degraded == 16);
  CHECK(rep.type_counts.counts.total() + rep.type_counts.undetected_gradual +
            rep.type_counts.undetected_sudden ==
        degraded);
  // every verdict echoes its window and respects the decision rule
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const Verdict& v = rep.verdicts[i];
    CHECK(v.device_id == ws[i].device_id);
    CHECK(v.truth == ws[i].label);
    CHECK(v.detected == detect(v.score, t.alpha));
    CHECK(v.decision == classify_type(v.score, t));
  }
  CHECK(rep.roc_available);
  CHECK(rep.roc.auc >= 0.0);
  CHECK(rep.roc.auc <= 1.0);

  SUBCASE("invalid thresholds and empty input are rejected") {
    Thresholds bad;
    bad.alpha = 0.5;
    bad.beta = 0.1;
    CHECK_THROWS_AS(evaluate(m, ws, bad), DataError);
    CHECK_THROWS_AS(evaluate(m, {}, t), DataError);
  }
}
