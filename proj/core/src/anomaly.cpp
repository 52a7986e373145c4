#include "laserprog/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "json.hpp"

namespace laserprog {

using nlohmann::json;

std::string to_string(TypeDecision d) {
  switch (d) {
    case TypeDecision::normal: return "normal";
    case TypeDecision::gradual: return "gradual";
    case TypeDecision::sudden: return "sudden";
  }
  throw DataError("unknown type decision");
}

Metrics metrics(const ConfusionCounts& c) {
  Metrics m;
  const auto ratio = [&m](std::size_t num, std::size_t den) {
    if (den == 0) {
      m.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.fpr = ratio(c.fp, c.fp + c.tn);
  m.fdr_paper = ratio(c.fp, c.fp + c.tp);
  const double pr = m.precision + m.recall;
  if (pr > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / pr;
  } else {
    m.f1 = 0.0;
    m.degenerate = true;
  }
  return m;
}

namespace {

constexpr double kClampTolerance = 1e-6;

void require_normalized(const PowerWindow& w) {
  if (!w.normalized) throw DataError("anomaly_score: window not normalized");
  for (double v : w.values) {
    if (v < -kClampTolerance || v > 1.0 + kClampTolerance) {
      throw DataError("anomaly_score: unnormalized input detected");
    }
  }
}

double squared_error(const Vec& x, const Vec& xhat) {
  double e = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - xhat[i];
    e += d * d;
  }
  return e;
}

}  // namespace

double anomaly_score(const ScvaeModel& model, const PowerWindow& window) {
  require_normalized(window);
  const Vec oc = model.oc_vector(window);
  const Vec xhat = model.reconstruct(window.values, oc, nullptr);
  return squared_error(window.values, xhat);
}

double anomaly_score_sampled(const ScvaeModel& model, const PowerWindow& window,
                             Rng& rng) {
  require_normalized(window);
  Vec eps(static_cast<std::size_t>(model.cfg.latent_dim));
  for (double& e : eps) e = gaussian(rng);
  const Vec oc = model.oc_vector(window);
  const Vec xhat = model.reconstruct(window.values, oc, &eps);
  return squared_error(window.values, xhat);
}

Label detect(double score, double alpha) {
  if (!(alpha > 0.0)) throw DataError("detect: alpha must be positive");
  return score > alpha ? Label::degraded : Label::normal;
}

TypeDecision classify_type(double score, const Thresholds& t) {
  t.validate();
  if (score <= t.alpha) return TypeDecision::normal;
  if (score <= t.beta) return TypeDecision::gradual;
  return TypeDecision::sudden;
}

namespace {

std::vector<double> threshold_candidates(const std::vector<ScoredWindow>& scored) {
  std::set<double> distinct;
  for (const ScoredWindow& s : scored) distinct.insert(s.score);
  std::vector<double> sorted(distinct.begin(), distinct.end());
  std::vector<double> cands;
  if (sorted.front() > 0.0) cands.push_back(0.5 * sorted.front());
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    cands.push_back(0.5 * (sorted[i] + sorted[i + 1]));
  }
  if (sorted.size() > 1 || cands.empty()) cands.push_back(sorted.back());
  return cands;
}

ConfusionCounts confusion_at(const std::vector<ScoredWindow>& scored,
                             double threshold) {
  ConfusionCounts c;
  for (const ScoredWindow& s : scored) {
    const bool called = s.score > threshold;
    if (s.positive) {
      (called ? c.tp : c.fn)++;
    } else {
      (called ? c.fp : c.tn)++;
    }
  }
  return c;
}

CalibrationResult sweep_best(const std::vector<ScoredWindow>& scored,
                             const std::vector<double>& candidates,
                             double min_precision) {
  CalibrationResult r;
  r.sweep.reserve(candidates.size());
  for (double t : candidates) {
    const Metrics m = metrics(confusion_at(scored, t));
    r.sweep.push_back({t, m.precision, m.recall, m.f1});
  }

  // default: smallest candidate maximizing F1; alternate mode: maximize
  // recall subject to precision >= min_precision, falling back to the F1
  // rule when the constraint is unattainable
  std::size_t best = r.sweep.size();
  if (min_precision > 0.0) {
    for (std::size_t i = 0; i < r.sweep.size(); ++i) {
      if (r.sweep[i].precision < min_precision) continue;
      if (best == r.sweep.size() || r.sweep[i].recall > r.sweep[best].recall) {
        best = i;
      }
    }
  }
  if (best == r.sweep.size()) {
    best = 0;
    for (std::size_t i = 1; i < r.sweep.size(); ++i) {
      if (r.sweep[i].f1 > r.sweep[best].f1) best = i;
    }
  }
  r.threshold = r.sweep[best].threshold;
  r.info.precision = r.sweep[best].precision;
  r.info.recall = r.sweep[best].recall;
  r.info.f1 = r.sweep[best].f1;
  r.info.n_candidates = candidates.size();
  r.info.partition_hash = score_hash(scored);
  return r;
}

}  // namespace

CalibrationResult calibrate_alpha(const std::vector<ScoredWindow>& scored,
                                  double min_precision) {
  const bool has_pos = std::any_of(scored.begin(), scored.end(),
                                   [](const auto& s) { return s.positive; });
  const bool has_neg = std::any_of(scored.begin(), scored.end(),
                                   [](const auto& s) { return !s.positive; });
  if (!has_pos || !has_neg) {
    throw DataError("calibrate_alpha: both labels must be present");
  }
  return sweep_best(scored, threshold_candidates(scored), min_precision);
}

CalibrationResult calibrate_beta(const std::vector<ScoredWindow>& degraded,
                                 double alpha) {
  const bool has_sudden = std::any_of(degraded.begin(), degraded.end(),
                                      [](const auto& s) { return s.positive; });
  const bool has_gradual = std::any_of(degraded.begin(), degraded.end(),
                                       [](const auto& s) { return !s.positive; });
  if (!has_sudden || !has_gradual) {
    throw DataError("calibrate_beta: both kinds must be present");
  }
  std::vector<double> cands = threshold_candidates(degraded);
  std::erase_if(cands, [alpha](double c) { return !(c > alpha); });
  if (cands.empty()) {
    throw DataError("calibrate_beta: no candidate threshold above alpha");
  }
  return sweep_best(degraded, cands, 0.0);
}

RocResult roc_auc(const std::vector<ScoredWindow>& scored) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const ScoredWindow& s : scored) (s.positive ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("roc_auc: both labels must be present");
  }

  std::vector<ScoredWindow> sorted = scored;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.score > b.score; });

  RocResult r;
  r.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double s = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == s) {
      (sorted[i].positive ? tp : fp)++;
      ++i;
    }
    r.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                        static_cast<double>(tp) / static_cast<double>(n_pos),
                        s});
  }
  for (std::size_t k = 1; k < r.points.size(); ++k) {
    const auto& a = r.points[k - 1];
    const auto& b = r.points[k];
    r.auc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
  }

  double correct = 0.0;
  for (const ScoredWindow& p : scored) {
    if (!p.positive) continue;
    for (const ScoredWindow& n : scored) {
      if (n.positive) continue;
      if (p.score > n.score) correct += 1.0;
      else if (p.score == n.score) correct += 0.5;
    }
  }
  r.auc_pairwise = correct / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return r;
}

std::uint64_t score_hash(const std::vector<ScoredWindow>& scored) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffULL;
      h *= 0x100000001b3ULL;
    }
  };
  for (const ScoredWindow& s : scored) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &s.score, sizeof(bits));
    mix(bits);
    mix(s.positive ? 1 : 0);
  }
  return h;
}

EvalReport evaluate(const ScvaeModel& model,
                    const std::vector<PowerWindow>& windows,
                    const Thresholds& thresholds) {
  thresholds.validate();
  if (windows.empty()) throw DataError("evaluate: empty window set");

  EvalReport rep;
  std::vector<ScoredWindow> scored;
  scored.reserve(windows.size());
  for (const PowerWindow& w : windows) {
    Verdict v;
    v.device_id = w.device_id;
    v.t_start_h = w.t_start_h;
    v.score = anomaly_score(model, w);
    v.detected = detect(v.score, thresholds.alpha);
    v.decision = classify_type(v.score, thresholds);
    v.truth = w.label;
    v.truth_kind = w.kind;
    rep.verdicts.push_back(v);
    scored.push_back({v.score, w.label == Label::degraded});

    const bool truth_pos = w.label == Label::degraded;
    const bool called_pos = v.detected == Label::degraded;
    if (truth_pos && called_pos) rep.counts.tp++;
    else if (truth_pos) rep.counts.fn++;
    else if (called_pos) rep.counts.fp++;
    else rep.counts.tn++;

    if (truth_pos) {
      if (!called_pos) {
        (w.kind == Kind::sudden ? rep.type_counts.undetected_sudden
                                : rep.type_counts.undetected_gradual)++;
      } else {
        const bool truly_sudden = w.kind == Kind::sudden;
        const bool called_sudden = v.decision == TypeDecision::sudden;
        if (truly_sudden && called_sudden) rep.type_counts.counts.tp++;
        else if (truly_sudden) rep.type_counts.counts.fn++;
        else if (called_sudden) rep.type_counts.counts.fp++;
        else rep.type_counts.counts.tn++;
      }
    }
  }
  rep.detection = metrics(rep.counts);
  rep.type_metrics = metrics(rep.type_counts.counts);
  try {
    rep.roc = roc_auc(scored);
    rep.roc_available = true;
  } catch (const DataError&) {
    rep.roc_available = false;
  }
  return rep;
}

// ---- report files ----

void write_report_json(const std::string& path, const EvalReport& rep,
                       const Thresholds& t) {
  json j;
  j["thresholds"] = {{"alpha", t.alpha}, {"beta", t.beta}};
  j["counts"] = {{"tp", rep.counts.tp}, {"tn", rep.counts.tn},
                 {"fp", rep.counts.fp}, {"fn", rep.counts.fn}};
  j["detection"] = {{"precision", rep.detection.precision},
                    {"recall", rep.detection.recall},
                    {"f1", rep.detection.f1},
                    {"fpr", rep.detection.fpr},
                    {"fdr_paper", rep.detection.fdr_paper},
                    {"degenerate", rep.detection.degenerate}};
  j["roc_available"] = rep.roc_available;
  if (rep.roc_available) {
    j["auc"] = rep.roc.auc;
    j["auc_pairwise"] = rep.roc.auc_pairwise;
  }
  j["type_classification"] = {
      {"tp", rep.type_counts.counts.tp}, {"tn", rep.type_counts.counts.tn},
      {"fp", rep.type_counts.counts.fp}, {"fn", rep.type_counts.counts.fn},
      {"undetected_gradual", rep.type_counts.undetected_gradual},
      {"undetected_sudden", rep.type_counts.undetected_sudden},
      {"precision", rep.type_metrics.precision},
      {"recall", rep.type_metrics.recall},
      {"f1", rep.type_metrics.f1}};
  j["n_windows"] = rep.verdicts.size();
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(1) << "\n";
}

void write_roc_csv(const std::string& path, const RocResult& roc) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.precision(17);
  out << "fpr,tpr,threshold\n";
  for (const RocPoint& p : roc.points) {
    out << p.fpr << "," << p.tpr << "," << p.threshold << "\n";
  }
}

void write_sweep_csv(const std::string& path,
                     const std::vector<SweepPoint>& sweep) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.precision(17);
  out << "threshold,precision,recall,f1\n";
  for (const SweepPoint& p : sweep) {
    out << p.threshold << "," << p.precision << "," << p.recall << ","
        << p.f1 << "\n";
  }
}

void write_verdicts_csv(const std::string& path,
                        const std::vector<Verdict>& verdicts) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.precision(17);
  out << "device_id,t_start_h,score,decision\n";
  for (const Verdict& v : verdicts) {
    out << v.device_id << "," << v.t_start_h << "," << v.score << ","
        << to_string(v.decision) << "\n";
  }
}

void write_thresholds(const std::string& path, const Thresholds& t) {
  t.validate();
  const auto info_json = [](const CalibrationInfo& i) {
    return json{{"partition_hash", i.partition_hash},
                {"n_candidates", i.n_candidates},
                {"precision", i.precision},
                {"recall", i.recall},
                {"f1", i.f1}};
  };
  json j{{"format", "laserprog-thresholds"},
         {"version", 1},
         {"alpha", t.alpha},
         {"beta", t.beta},
         {"alpha_info", info_json(t.alpha_info)},
         {"beta_info", info_json(t.beta_info)}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(1) << "\n";
}

Thresholds read_thresholds(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
    if (j.at("format").get<std::string>() != "laserprog-thresholds" ||
        j.at("version").get<int>() != 1) {
      throw DataError("unsupported thresholds file " + path);
    }
    Thresholds t;
    t.alpha = j.at("alpha").get<double>();
    t.beta = j.at("beta").get<double>();
    const auto info_from = [](const json& ij) {
      CalibrationInfo i;
      i.partition_hash = ij.at("partition_hash").get<std::uint64_t>();
      i.n_candidates = ij.at("n_candidates").get<std::size_t>();
      i.precision = ij.at("precision").get<double>();
      i.recall = ij.at("recall").get<double>();
      i.f1 = ij.at("f1").get<double>();
      return i;
    };
    t.alpha_info = info_from(j.at("alpha_info"));
    t.beta_info = info_from(j.at("beta_info"));
    t.validate();
    return t;
  } catch (const json::exception& e) {
    throw DataError("thresholds schema violation: " + std::string(e.what()));
  }
}

}  // namespace laserprog
