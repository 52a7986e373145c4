#include "laserprog/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "laserprog/errors.hpp"

namespace laserprog {

std::vector<PowerWindow> normalize_all(const NormStats& stats,
                                       const std::vector<PowerWindow>& ws) {
  std::vector<PowerWindow> out;
  out.reserve(ws.size());
  for (const auto& w : ws) out.push_back(normalize_apply(stats, w));
  return out;
}

std::vector<ScoredWindow> score_windows(const ScvaeModel& model,
                                        const std::vector<PowerWindow>& ws) {
  std::vector<ScoredWindow> scored;
  scored.reserve(ws.size());
  for (const auto& w : ws) {
    scored.push_back({anomaly_score(model, w), w.label == Label::degraded});
  }
  return scored;
}

Thresholds calibrate_thresholds(const ScvaeModel& model,
                                const std::vector<PowerWindow>& calib,
                                CalibrationResult* alpha_out,
                                CalibrationResult* beta_out,
                                double min_precision) {
  std::vector<ScoredWindow> all;
  std::vector<ScoredWindow> degraded;  // positive = sudden
  all.reserve(calib.size());
  for (const auto& w : calib) {
    double s = anomaly_score(model, w);
    all.push_back({s, w.label == Label::degraded});
    if (w.label == Label::degraded) {
      degraded.push_back({s, w.kind == Kind::sudden});
    }
  }
  CalibrationResult a = calibrate_alpha(all, min_precision);
  CalibrationResult b = calibrate_beta(degraded, a.threshold);
  if (alpha_out) *alpha_out = a;
  if (beta_out) *beta_out = b;
  Thresholds t;
  t.alpha = a.threshold;
  t.beta = b.threshold;
  t.alpha_info = a.info;
  t.beta_info = b.info;
  t.alpha_info.partition_hash = score_hash(all);
  t.beta_info.partition_hash = score_hash(degraded);
  t.validate();
  return t;
}

PipelineArtifacts run_pipeline(const DatasetSpec& spec, ScvaeConfig cfg) {
  PipelineArtifacts out;
  cfg.seq_len = spec.seq_len;
  out.raw = build_dataset(spec);
  out.norm = normalize_fit(out.raw.train);
  out.train = normalize_all(out.norm, out.raw.train);
  out.calib = normalize_all(out.norm, out.raw.calib);
  out.test = normalize_all(out.norm, out.raw.test);

  TrainResult tr = scvae_train(out.train, cfg, out.norm);
  out.model = std::move(tr.model);
  out.epoch_loss = std::move(tr.epoch_loss);

  out.thresholds =
      calibrate_thresholds(out.model, out.calib, &out.alpha_cal, &out.beta_cal);
  out.report = evaluate(out.model, out.test, out.thresholds);
  return out;
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw DataError("median: empty input");
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

OcAblationResult run_oc_ablation(DatasetSpec spec, ScvaeConfig cfg,
                                 const std::vector<std::uint64_t>& seeds) {
  OcAblationResult res;
  std::vector<double> with_oc, without_oc;
  for (std::uint64_t seed : seeds) {
    spec.seed = seed;
    cfg.seed = seed;

    ScvaeConfig cfg_with = cfg;
    cfg_with.oc_dim = 2;
    PipelineArtifacts a = run_pipeline(spec, cfg_with);

    ScvaeConfig cfg_without = cfg;
    cfg_without.oc_dim = 0;
    PipelineArtifacts b = run_pipeline(spec, cfg_without);

    res.rows.push_back({seed, a.report.detection.f1, b.report.detection.f1});
    with_oc.push_back(a.report.detection.f1);
    without_oc.push_back(b.report.detection.f1);
  }
  res.median_with_oc = median(with_oc);
  res.median_without_oc = median(without_oc);
  return res;
}

std::vector<SeqLenRow> run_seqlen_sweep(DatasetSpec spec, ScvaeConfig cfg,
                                        const std::vector<int>& lengths) {
  std::vector<SeqLenRow> rows;
  for (int len : lengths) {
    if (len < 2) throw DataError("run_seqlen_sweep: seq_len must be >= 2");
    spec.seq_len = len;
    PipelineArtifacts a = run_pipeline(spec, cfg);
    rows.push_back({len, a.report.detection.f1,
                    a.report.roc_available ? a.report.roc.auc : 0.0});
  }
  return rows;
}

namespace {

struct ScoreSet {
  std::vector<ScoredWindow> scored;
  double auc = 0.0;
  double f1 = 0.0;
};

ScoreSet finish(std::vector<ScoredWindow> scored) {
  ScoreSet s;
  s.scored = std::move(scored);
  s.auc = roc_auc(s.scored).auc;
  s.f1 = calibrate_alpha(s.scored).info.f1;
  return s;
}

}  // namespace

BaselineResult run_baselines(DatasetSpec spec, ScvaeConfig cfg,
                             const std::vector<std::uint64_t>& seeds,
                             LofConfig lof_cfg) {
  BaselineResult res;
  std::vector<double> auc_s, auc_g, auc_l;
  for (std::uint64_t seed : seeds) {
    spec.seed = seed;
    cfg.seed = seed;
    cfg.seq_len = spec.seq_len;
    Dataset raw = build_dataset(spec);
    NormStats norm = normalize_fit(raw.train);
    auto train = normalize_all(norm, raw.train);
    auto test = normalize_all(norm, raw.test);

    ScvaeConfig vcfg = cfg;
    vcfg.variational = true;
    ScvaeModel scvae = scvae_train(train, vcfg, norm).model;
    ScoreSet ss = finish(score_windows(scvae, test));

    ScvaeConfig acfg = cfg;
    ScvaeModel gru_ae = gru_ae_train(train, acfg, norm).model;
    std::vector<ScoredWindow> gsc;
    gsc.reserve(test.size());
    for (const auto& w : test) {
      gsc.push_back({gru_ae_score(gru_ae, w), w.label == Label::degraded});
    }
    ScoreSet gs = finish(std::move(gsc));

    std::vector<Vec> ref;
    ref.reserve(train.size());
    for (const auto& w : train) ref.push_back(lof_features(w));
    LofConfig lc = lof_cfg;
    lc.k = std::min<int>(lc.k, static_cast<int>(ref.size()) - 1);
    LofModel lof = LofModel::fit(std::move(ref), lc);
    std::vector<ScoredWindow> lsc;
    lsc.reserve(test.size());
    for (const auto& w : test) {
      lsc.push_back({lof.score(lof_features(w)), w.label == Label::degraded});
    }
    ScoreSet ls = finish(std::move(lsc));

    res.rows.push_back(
        {seed, ss.auc, gs.auc, ls.auc, ss.f1, gs.f1, ls.f1});
    auc_s.push_back(ss.auc);
    auc_g.push_back(gs.auc);
    auc_l.push_back(ls.auc);
  }
  res.median_auc_scvae = median(auc_s);
  res.median_auc_gru_ae = median(auc_g);
  res.median_auc_lof = median(auc_l);
  return res;
}

EarlyPredictionResult run_early_prediction(DatasetSpec spec, ScvaeConfig cfg) {
  // Sudden failures carry no pre-failure signal by construction, so the
  // early-warning cohort is restricted to gradually degrading devices.
  spec.sudden_per_cell = 0;
  cfg.seq_len = spec.seq_len;
  Dataset raw = build_dataset(spec);
  NormStats norm = normalize_fit(raw.train);
  auto train = normalize_all(norm, raw.train);
  auto calib = normalize_all(norm, raw.calib);
  auto test = normalize_all(norm, raw.test);

  ScvaeModel model = scvae_train(train, cfg, norm).model;
  CalibrationResult a = calibrate_alpha(score_windows(model, calib));

  double window_span = (spec.seq_len - 1) * spec.interval_h;
  EarlyPredictionResult res;
  res.alpha = a.threshold;
  for (const auto& w : test) {
    if (w.label != Label::degraded) continue;
    if (w.t_start_h + window_span > 5000.0) continue;
    ++res.n_windows;
    if (detect(anomaly_score(model, w), a.threshold) == Label::degraded) {
      ++res.n_flagged;
    }
  }
  if (res.n_windows == 0) {
    throw DataError("run_early_prediction: no early windows in test set");
  }
  res.recall = static_cast<double>(res.n_flagged) /
               static_cast<double>(res.n_windows);
  return res;
}

RobustnessResult run_batch_robustness(const DatasetSpec& spec,
                                      ScvaeConfig cfg) {
  PipelineArtifacts base = run_pipeline(spec, cfg);
  RobustnessResult res;
  res.f1_base = base.report.detection.f1;

  struct Case {
    BatchShift shift;
    bool extended;
  };
  std::vector<Case> cases{
      {{1.05, 1.2, 1.15, false}, false},
      {{0.95, 1.3, 0.85, true}, true},
  };
  int batch = spec.batch_id;
  for (const auto& c : cases) {
    ++batch;
    DatasetSpec shifted = batch_shift(spec, c.shift);
    shifted.batch_id = batch;
    shifted.seed = mix_seed(spec.seed, 0xb407u + static_cast<std::uint64_t>(batch));
    Dataset raw = build_dataset(shifted);
    auto test = normalize_all(base.norm, raw.test);
    EvalReport rep = evaluate(base.model, test, base.thresholds);
    res.rows.push_back({batch, c.extended, rep.detection.f1,
                        rep.roc_available ? rep.roc.auc : 0.0});
  }
  return res;
}

}  // namespace laserprog
