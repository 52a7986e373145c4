#pragma once

#include <vector>

#include "laserprog/anomaly.hpp"
#include "laserprog/baselines.hpp"
#include "laserprog/datagen.hpp"
#include "laserprog/scvae.hpp"

namespace laserprog {

std::vector<PowerWindow> normalize_all(const NormStats& stats,
                                       const std::vector<PowerWindow>& ws);

std::vector<ScoredWindow> score_windows(const ScvaeModel& model,
                                        const std::vector<PowerWindow>& ws);

// Calibrates alpha on the full calibration partition and beta on its
// degraded subset (sudden as the positive class).
Thresholds calibrate_thresholds(const ScvaeModel& model,
                                const std::vector<PowerWindow>& calib,
                                CalibrationResult* alpha_out = nullptr,
                                CalibrationResult* beta_out = nullptr,
                                double min_precision = 0.0);

// Everything produced by one gen -> train -> calibrate -> eval run.
struct PipelineArtifacts {
  Dataset raw;
  NormStats norm;
  std::vector<PowerWindow> train, calib, test;  // normalized
  ScvaeModel model;
  Vec epoch_loss;
  Thresholds thresholds;
  CalibrationResult alpha_cal, beta_cal;
  EvalReport report;
};

PipelineArtifacts run_pipeline(const DatasetSpec& spec, ScvaeConfig cfg);

// Table I analogue: F1 with and without operating-condition conditioning.
struct OcAblationRow {
  std::uint64_t seed;
  double f1_with_oc, f1_without_oc;
};
struct OcAblationResult {
  std::vector<OcAblationRow> rows;
  double median_with_oc, median_without_oc;
};
OcAblationResult run_oc_ablation(DatasetSpec spec, ScvaeConfig cfg,
                                 const std::vector<std::uint64_t>& seeds);

// Fig. 10 analogue: detection quality versus window length.
struct SeqLenRow {
  int seq_len;
  double f1, auc;
};
std::vector<SeqLenRow> run_seqlen_sweep(DatasetSpec spec, ScvaeConfig cfg,
                                        const std::vector<int>& lengths);

// Fig. 11 analogue: SCVAE vs GRU-AE vs LOF.
struct BaselineRow {
  std::uint64_t seed;
  double auc_scvae, auc_gru_ae, auc_lof;
  double f1_scvae, f1_gru_ae, f1_lof;
};
struct BaselineResult {
  std::vector<BaselineRow> rows;
  double median_auc_scvae, median_auc_gru_ae, median_auc_lof;
};
BaselineResult run_baselines(DatasetSpec spec, ScvaeConfig cfg,
                             const std::vector<std::uint64_t>& seeds,
                             LofConfig lof_cfg = {});

// Fig. 9 analogue: recall on windows confined to the first 5,000 h of
// devices that fail after 5,000 h.
struct EarlyPredictionResult {
  std::size_t n_windows = 0;
  std::size_t n_flagged = 0;
  double recall = 0.0;
  double alpha = 0.0;
};
EarlyPredictionResult run_early_prediction(DatasetSpec spec, ScvaeConfig cfg);

// Table II analogue: F1 on batch-shifted test data with the base model and
// thresholds.
struct RobustnessRow {
  int batch_id;
  bool extended_grid;
  double f1, auc;
};
struct RobustnessResult {
  double f1_base;
  std::vector<RobustnessRow> rows;
};
RobustnessResult run_batch_robustness(const DatasetSpec& spec, ScvaeConfig cfg);

double median(std::vector<double> xs);

}  // namespace laserprog
