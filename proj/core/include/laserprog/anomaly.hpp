#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "laserprog/scvae.hpp"
#include "laserprog/types.hpp"

namespace laserprog {

// Detection threshold alpha and type-split threshold beta with calibration
// provenance. Invariant: 0 < alpha < beta.
struct CalibrationInfo {
  std::uint64_t partition_hash = 0;
  std::size_t n_candidates = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct Thresholds {
  double alpha = 0.0;
  double beta = 0.0;
  CalibrationInfo alpha_info;
  CalibrationInfo beta_info;

  void validate() const {
    if (!(alpha > 0.0) || !(alpha < beta)) {
      throw DataError("Thresholds: require 0 < alpha < beta");
    }
  }
};

enum class TypeDecision { normal, gradual, sudden };
std::string to_string(TypeDecision d);

struct Verdict {
  std::string device_id;
  double t_start_h = 0.0;
  double score = 0.0;
  Label detected = Label::normal;
  TypeDecision decision = TypeDecision::normal;
  Label truth = Label::normal;
  Kind truth_kind = Kind::normal;
};

struct ConfusionCounts {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::size_t total() const { return tp + tn + fp + fn; }
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fpr = 0.0;        // FP / (FP + TN), the standard ROC x-axis
  double fdr_paper = 0.0;  // FP / (FP + TP), as printed in the source text
  bool degenerate = false; // some denominator was zero
};

Metrics metrics(const ConfusionCounts& c);

// Squared L2 reconstruction error via the deterministic (eps = 0) path.
double anomaly_score(const ScvaeModel& model, const PowerWindow& window);
// Stochastic variant: one seeded eps draw per call.
double anomaly_score_sampled(const ScvaeModel& model, const PowerWindow& window,
                             Rng& rng);

// degraded iff score > alpha (strict).
Label detect(double score, double alpha);

// normal if e <= alpha; gradual if alpha < e <= beta; sudden if e > beta.
TypeDecision classify_type(double score, const Thresholds& t);

struct ScoredWindow {
  double score = 0.0;
  bool positive = false;  // degraded for alpha, sudden for beta
};

struct SweepPoint {
  double threshold = 0.0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct CalibrationResult {
  double threshold = 0.0;
  CalibrationInfo info;
  std::vector<SweepPoint> sweep;
};

// F1-maximizing threshold over candidates built from midpoints between
// consecutive distinct scores plus the extremes; ties broken toward the
// smallest candidate. In the alternate mode the recall is maximized subject
// to precision >= min_precision (falls back to F1 if unattainable).
CalibrationResult calibrate_alpha(const std::vector<ScoredWindow>& scored,
                                  double min_precision = 0.0);

// Same sweep over the gradual(negative)/sudden(positive) split, constrained
// to candidates > alpha.
CalibrationResult calibrate_beta(const std::vector<ScoredWindow>& degraded,
                                 double alpha);

struct RocPoint {
  double fpr = 0.0, tpr = 0.0, threshold = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;
  double auc = 0.0;           // trapezoidal
  double auc_pairwise = 0.0;  // fraction of correctly ordered pairs, ties 1/2
};

RocResult roc_auc(const std::vector<ScoredWindow>& scored);

struct TypeEvalCounts {
  // sudden is the positive class; evaluated over truly degraded windows
  // that were detected (score > alpha)
  ConfusionCounts counts;
  std::size_t undetected_gradual = 0;
  std::size_t undetected_sudden = 0;
};

struct EvalReport {
  ConfusionCounts counts;
  Metrics detection;
  RocResult roc;
  bool roc_available = false;
  TypeEvalCounts type_counts;
  Metrics type_metrics;
  std::vector<Verdict> verdicts;
};

// Scores every window, applies detect/classify_type, aggregates metrics and
// ROC/AUC. Windows must be normalized.
EvalReport evaluate(const ScvaeModel& model,
                    const std::vector<PowerWindow>& windows,
                    const Thresholds& thresholds);

std::uint64_t score_hash(const std::vector<ScoredWindow>& scored);

void write_report_json(const std::string& path, const EvalReport& report,
                       const Thresholds& thresholds);
void write_roc_csv(const std::string& path, const RocResult& roc);
void write_sweep_csv(const std::string& path,
                     const std::vector<SweepPoint>& sweep);
void write_verdicts_csv(const std::string& path,
                        const std::vector<Verdict>& verdicts);
void write_thresholds(const std::string& path, const Thresholds& t);
Thresholds read_thresholds(const std::string& path);

}  // namespace laserprog
