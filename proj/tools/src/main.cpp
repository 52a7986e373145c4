// laserprog: laser degradation-prognostics pipeline CLI.
//
// Subcommands: gen, train, calibrate, eval, score, experiment.
// Option precedence: built-in defaults < --config JSON file < flags.
// Exit codes: 0 success, 2 usage, 3 data error, 4 numeric failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "laserprog/anomaly.hpp"
#include "laserprog/baselines.hpp"
#include "laserprog/datagen.hpp"
#include "laserprog/errors.hpp"
#include "laserprog/experiments.hpp"
#include "laserprog/scvae.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace laserprog;

namespace {

struct GlobalOpts {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_dir = ".";
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("config parse error: " + std::string(e.what()));
  }
  if (!j.is_object()) throw DataError("config file must hold a JSON object");
  return j;
}

template <typename T>
void merge(const json& cfg, const char* key, T& field) {
  if (cfg.contains(key)) field = cfg.at(key).get<T>();
}

ScvaeConfig model_config(const json& cfg) {
  ScvaeConfig c;
  merge(cfg, "seq_len", c.seq_len);
  merge(cfg, "encoder_sizes", c.encoder_sizes);
  merge(cfg, "latent_dim", c.latent_dim);
  merge(cfg, "oc_dim", c.oc_dim);
  merge(cfg, "learning_rate", c.learning_rate);
  merge(cfg, "batch_size", c.batch_size);
  merge(cfg, "epochs", c.epochs);
  merge(cfg, "seed", c.seed);
  merge(cfg, "kl_weight", c.kl_weight);
  merge(cfg, "variational", c.variational);
  return c;
}

DatasetSpec dataset_spec(const json& cfg) {
  DatasetSpec s;
  merge(cfg, "normal_per_cell", s.normal_per_cell);
  merge(cfg, "gradual_per_cell", s.gradual_per_cell);
  merge(cfg, "sudden_per_cell", s.sudden_per_cell);
  merge(cfg, "horizon_h", s.horizon_h);
  merge(cfg, "interval_h", s.interval_h);
  merge(cfg, "noise_sigma", s.noise_sigma);
  merge(cfg, "p0_spread", s.p0_spread);
  merge(cfg, "drift_max", s.drift_max);
  merge(cfg, "level_temp_coeff", s.level_temp_coeff);
  merge(cfg, "r0_per_h", s.r0_per_h);
  merge(cfg, "rate_jitter_sigma", s.rate_jitter_sigma);
  merge(cfg, "gradual_tf_min_h", s.gradual_tf_min_h);
  merge(cfg, "gradual_tf_max_frac", s.gradual_tf_max_frac);
  merge(cfg, "sudden_tf_min_h", s.sudden_tf_min_h);
  merge(cfg, "sudden_tf_max_h", s.sudden_tf_max_h);
  merge(cfg, "sudden_drop_min", s.sudden_drop_min);
  merge(cfg, "sudden_drop_max", s.sudden_drop_max);
  merge(cfg, "seq_len", s.seq_len);
  merge(cfg, "stride", s.stride);
  merge(cfg, "train_fraction", s.train_fraction);
  merge(cfg, "seed", s.seed);
  merge(cfg, "batch_id", s.batch_id);
  return s;
}

json scvae_config_json(const ScvaeConfig& c) {
  return json{{"seq_len", c.seq_len},
              {"encoder_sizes", c.encoder_sizes},
              {"latent_dim", c.latent_dim},
              {"oc_dim", c.oc_dim},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"kl_weight", c.kl_weight},
              {"variational", c.variational}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

// Every command drops the fully resolved options next to its outputs so a
// run can be reproduced from the artifact directory alone.
void echo_config(const GlobalOpts& g, const std::string& command,
                 const json& resolved) {
  json j{{"command", command},
         {"seed", g.seed ? json(*g.seed) : json(nullptr)},
         {"out_dir", g.out_dir},
         {"options", resolved}};
  write_json(fs::path(g.out_dir) / (command + "_config.json"), j);
}

std::vector<PowerWindow> load_normalized(const ScvaeModel& model,
                                         const std::string& csv) {
  auto raw = read_windows_csv(csv);
  std::vector<PowerWindow> out;
  out.reserve(raw.size());
  for (const auto& w : raw) out.push_back(normalize_apply(model.norm, w));
  return out;
}

int cmd_gen(const GlobalOpts& g, const std::string& spec_path) {
  DatasetSpec spec;
  if (!spec_path.empty()) {
    spec = read_spec(spec_path);
  } else {
    spec = dataset_spec(load_config(g.config_path));
  }
  if (g.seed) spec.seed = *g.seed;
  spec.validate();

  fs::create_directories(g.out_dir);
  Dataset ds = build_dataset(spec);
  fs::path dir(g.out_dir);
  write_windows_csv((dir / "train.csv").string(), ds.train, spec.seq_len);
  write_windows_csv((dir / "calib.csv").string(), ds.calib, spec.seq_len);
  write_windows_csv((dir / "test.csv").string(), ds.test, spec.seq_len);
  write_spec((dir / "spec.json").string(), spec);

  std::size_t test_degraded = 0;
  for (const auto& w : ds.test)
    if (w.label == Label::degraded) ++test_degraded;
  json manifest{{"train_windows", ds.train.size()},
                {"calib_windows", ds.calib.size()},
                {"test_windows", ds.test.size()},
                {"test_degraded_windows", test_degraded},
                {"seed", spec.seed}};
  write_json(dir / "manifest.json", manifest);
  echo_config(g, "gen", manifest);
  std::cout << "wrote " << ds.train.size() << "/" << ds.calib.size() << "/"
            << ds.test.size() << " train/calib/test windows to " << g.out_dir
            << "\n";
  return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& train_csv) {
  ScvaeConfig cfg = model_config(load_config(g.config_path));
  if (g.seed) cfg.seed = *g.seed;

  auto raw = read_windows_csv(train_csv);
  NormStats norm = normalize_fit(raw);
  std::vector<PowerWindow> train;
  train.reserve(raw.size());
  for (const auto& w : raw) train.push_back(normalize_apply(norm, w));

  fs::create_directories(g.out_dir);
  TrainResult tr = scvae_train(train, cfg, norm);
  fs::path dir(g.out_dir);
  tr.model.save((dir / "model.json").string());
  std::ofstream loss(dir / "loss.csv");
  loss << "epoch,mean_total_loss\n";
  for (std::size_t i = 0; i < tr.epoch_loss.size(); ++i) {
    loss << i + 1 << "," << tr.epoch_loss[i] << "\n";
  }
  echo_config(g, "train", scvae_config_json(cfg));
  std::cout << "trained on " << train.size() << " windows; final loss "
            << (tr.epoch_loss.empty() ? 0.0 : tr.epoch_loss.back()) << "\n";
  return 0;
}

int cmd_calibrate(const GlobalOpts& g, const std::string& model_path,
                  const std::string& calib_csv, double min_precision) {
  ScvaeModel model = ScvaeModel::load(model_path);
  auto calib = load_normalized(model, calib_csv);

  CalibrationResult a, b;
  Thresholds t = calibrate_thresholds(model, calib, &a, &b, min_precision);
  fs::create_directories(g.out_dir);
  fs::path dir(g.out_dir);
  write_thresholds((dir / "thresholds.json").string(), t);
  write_sweep_csv((dir / "sweep_alpha.csv").string(), a.sweep);
  write_sweep_csv((dir / "sweep_beta.csv").string(), b.sweep);
  echo_config(g, "calibrate",
              json{{"model", model_path},
                   {"calib_csv", calib_csv},
                   {"min_precision", min_precision}});
  std::cout << "alpha=" << t.alpha << " (F1=" << t.alpha_info.f1
            << ") beta=" << t.beta << " (F1=" << t.beta_info.f1 << ")\n";
  return 0;
}

int cmd_eval(const GlobalOpts& g, const std::string& model_path,
             const std::string& thresholds_path, const std::string& test_csv) {
  ScvaeModel model = ScvaeModel::load(model_path);
  Thresholds t = read_thresholds(thresholds_path);
  auto test = load_normalized(model, test_csv);
  if (test.empty()) throw DataError("eval: empty test set");

  EvalReport rep = evaluate(model, test, t);
  fs::create_directories(g.out_dir);
  fs::path dir(g.out_dir);
  write_report_json((dir / "report.json").string(), rep, t);
  if (rep.roc_available) write_roc_csv((dir / "roc.csv").string(), rep.roc);
  write_verdicts_csv((dir / "verdicts.csv").string(), rep.verdicts);
  echo_config(g, "eval",
              json{{"model", model_path},
                   {"thresholds", thresholds_path},
                   {"test_csv", test_csv}});
  std::cout << "detection F1=" << rep.detection.f1
            << " precision=" << rep.detection.precision
            << " recall=" << rep.detection.recall;
  if (rep.roc_available) std::cout << " AUC=" << rep.roc.auc;
  std::cout << "\n";
  return 0;
}

int cmd_score(const GlobalOpts& g, const std::string& model_path,
              const std::string& input_csv,
              const std::string& thresholds_path) {
  ScvaeModel model = ScvaeModel::load(model_path);
  auto ws = load_normalized(model, input_csv);
  std::optional<Thresholds> t;
  if (!thresholds_path.empty()) t = read_thresholds(thresholds_path);

  fs::create_directories(g.out_dir);
  std::ofstream out(fs::path(g.out_dir) / "scores.csv");
  out << "device_id,t_start_h,score";
  if (t) out << ",detected,decision";
  out << "\n";
  out.precision(17);
  for (const auto& w : ws) {
    double s = anomaly_score(model, w);
    out << w.device_id << "," << w.t_start_h << "," << s;
    if (t) {
      out << "," << to_string(detect(s, t->alpha)) << ","
          << to_string(classify_type(s, *t));
    }
    out << "\n";
  }
  echo_config(g, "score",
              json{{"model", model_path},
                   {"input_csv", input_csv},
                   {"thresholds", thresholds_path}});
  std::cout << "scored " << ws.size() << " windows\n";
  return 0;
}

void write_csv_rows(const fs::path& path, const std::string& header,
                    const std::vector<std::string>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << header << "\n";
  for (const auto& r : rows) out << r << "\n";
}

int cmd_experiment(const GlobalOpts& g, const std::string& name) {
  json cfg_json = load_config(g.config_path);
  DatasetSpec spec = dataset_spec(cfg_json);
  ScvaeConfig cfg = model_config(cfg_json);
  // Experiments train several models, so default to a shorter schedule
  // unless the config says otherwise.
  if (!cfg_json.contains("epochs")) cfg.epochs = 60;
  if (g.seed) {
    spec.seed = *g.seed;
    cfg.seed = *g.seed;
  }
  int n_seeds = 5;
  merge(cfg_json, "n_seeds", n_seeds);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n_seeds; ++i) seeds.push_back(mix_seed(spec.seed, 100 + i));

  fs::create_directories(g.out_dir);
  fs::path dir(g.out_dir);
  char buf[256];

  if (name == "oc_ablation") {
    OcAblationResult r = run_oc_ablation(spec, cfg, seeds);
    std::vector<std::string> rows;
    for (const auto& row : r.rows) {
      std::snprintf(buf, sizeof buf, "%llu,%.6f,%.6f",
                    static_cast<unsigned long long>(row.seed), row.f1_with_oc,
                    row.f1_without_oc);
      rows.emplace_back(buf);
    }
    write_csv_rows(dir / "oc_ablation.csv", "seed,f1_with_oc,f1_without_oc",
                   rows);
    write_json(dir / "oc_ablation.json",
               json{{"median_f1_with_oc", r.median_with_oc},
                    {"median_f1_without_oc", r.median_without_oc}});
    std::cout << "median F1 with oc " << r.median_with_oc << ", without oc "
              << r.median_without_oc << "\n";
  } else if (name == "seqlen_sweep") {
    auto rows_r = run_seqlen_sweep(spec, cfg, {4, 5, 6, 7, 8});
    std::vector<std::string> rows;
    for (const auto& row : rows_r) {
      std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f", row.seq_len, row.f1,
                    row.auc);
      rows.emplace_back(buf);
    }
    write_csv_rows(dir / "seqlen_sweep.csv", "seq_len,f1,auc", rows);
    std::cout << "sequence-length sweep written (" << rows.size()
              << " rows)\n";
  } else if (name == "baselines") {
    BaselineResult r = run_baselines(spec, cfg, seeds);
    std::vector<std::string> rows;
    for (const auto& row : r.rows) {
      std::snprintf(buf, sizeof buf, "%llu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f",
                    static_cast<unsigned long long>(row.seed), row.auc_scvae,
                    row.auc_gru_ae, row.auc_lof, row.f1_scvae, row.f1_gru_ae,
                    row.f1_lof);
      rows.emplace_back(buf);
    }
    write_csv_rows(dir / "baselines.csv",
                   "seed,auc_scvae,auc_gru_ae,auc_lof,f1_scvae,f1_gru_ae,"
                   "f1_lof",
                   rows);
    write_json(dir / "baselines.json",
               json{{"median_auc_scvae", r.median_auc_scvae},
                    {"median_auc_gru_ae", r.median_auc_gru_ae},
                    {"median_auc_lof", r.median_auc_lof}});
    std::cout << "median AUC scvae " << r.median_auc_scvae << ", gru_ae "
              << r.median_auc_gru_ae << ", lof " << r.median_auc_lof << "\n";
  } else if (name == "early_prediction") {
    EarlyPredictionResult r = run_early_prediction(spec, cfg);
    write_json(dir / "early_prediction.json",
               json{{"n_windows", r.n_windows},
                    {"n_flagged", r.n_flagged},
                    {"recall", r.recall},
                    {"alpha", r.alpha}});
    std::cout << "early-window recall " << r.recall << " (" << r.n_flagged
              << "/" << r.n_windows << ")\n";
  } else if (name == "batch_robustness") {
    RobustnessResult r = run_batch_robustness(spec, cfg);
    std::vector<std::string> rows;
    for (const auto& row : r.rows) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f", row.batch_id,
                    row.extended_grid ? 1 : 0, row.f1, row.auc);
      rows.emplace_back(buf);
    }
    write_csv_rows(dir / "batch_robustness.csv",
                   "batch_id,extended_grid,f1,auc", rows);
    write_json(dir / "batch_robustness.json", json{{"f1_base", r.f1_base}});
    std::cout << "base F1 " << r.f1_base << "; " << rows.size()
              << " shifted batches written\n";
  } else {
    // CLI11 validates the name, so this is unreachable; keep the guard.
    throw CLI::ValidationError("experiment", "unknown experiment: " + name);
  }
  echo_config(g, "experiment",
              json{{"name", name},
                   {"n_seeds", n_seeds},
                   {"model", scvae_config_json(cfg)}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"laser degradation prognostics pipeline"};
  app.require_subcommand(1);

  GlobalOpts g;
  std::uint64_t seed_flag = 0;
  auto* seed_opt = app.add_option("--seed", seed_flag, "global RNG seed");
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--out-dir", g.out_dir, "output directory");

  std::string spec_path, train_csv, calib_csv, test_csv, input_csv;
  std::string model_path, thresholds_path, experiment_name;
  double min_precision = 0.0;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--spec", spec_path, "dataset spec JSON");

  auto* train = app.add_subcommand("train", "train a model on normal windows");
  train->add_option("--train", train_csv, "training windows CSV")->required();

  auto* calibrate =
      app.add_subcommand("calibrate", "fit alpha/beta thresholds");
  calibrate->add_option("--model", model_path, "model file")->required();
  calibrate->add_option("--calib", calib_csv, "calibration CSV")->required();
  calibrate->add_option("--min-precision", min_precision,
                        "maximize recall subject to this precision");

  auto* eval = app.add_subcommand("eval", "evaluate on a labeled test set");
  eval->add_option("--model", model_path, "model file")->required();
  eval->add_option("--thresholds", thresholds_path, "thresholds file")
      ->required();
  eval->add_option("--test", test_csv, "test CSV")->required();

  auto* score = app.add_subcommand("score", "score windows with a model");
  score->add_option("--model", model_path, "model file")->required();
  score->add_option("--input", input_csv, "windows CSV")->required();
  score->add_option("--thresholds", thresholds_path,
                    "optional thresholds for verdict columns");

  auto* experiment = app.add_subcommand("experiment", "run a named study");
  experiment
      ->add_option("--name", experiment_name,
                   "oc_ablation|seqlen_sweep|baselines|early_prediction|"
                   "batch_robustness")
      ->required()
      ->check(CLI::IsMember({"oc_ablation", "seqlen_sweep", "baselines",
                             "early_prediction", "batch_robustness"}));

  // Lets --seed/--config/--out-dir appear after the subcommand name.
  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (seed_opt->count() > 0) g.seed = seed_flag;

  try {
    if (gen->parsed()) return cmd_gen(g, spec_path);
    if (train->parsed()) return cmd_train(g, train_csv);
    if (calibrate->parsed())
      return cmd_calibrate(g, model_path, calib_csv, min_precision);
    if (eval->parsed())
      return cmd_eval(g, model_path, thresholds_path, test_csv);
    if (score->parsed())
      return cmd_score(g, model_path, input_csv, thresholds_path);
    if (experiment->parsed()) return cmd_experiment(g, experiment_name);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
