#include "laserprog/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "laserprog/rng.hpp"

namespace laserprog {

using nlohmann::json;

namespace {
constexpr double kFailureFraction = 0.8;     // 20% power-drop criterion
constexpr double kEarlyTestCutoffH = 5000.0; // test uses post-5,000 h failures
constexpr double kNoiseClip = 4.0;           // sigmas; keeps the noise margin
}  // namespace

void DatasetSpec::validate() const {
  if (oc_grid.empty()) throw DataError("spec: empty oc grid");
  for (const auto& oc : oc_grid) {
    if (oc.temperature_c < 20.0 || oc.temperature_c > 120.0 ||
        oc.current_ma < 5.0 || oc.current_ma > 30.0) {
      throw DataError("spec: operating conditions out of range");
    }
  }
  if (normal_per_cell < 0 || gradual_per_cell < 0 || sudden_per_cell < 0) {
    throw DataError("spec: negative device count");
  }
  if (horizon_h <= 0.0 || interval_h <= 0.0 ||
      horizon_h < seq_len * interval_h) {
    throw DataError("spec: horizon too short for one window");
  }
  if (p0_mean_mw <= 0.0) throw DataError("spec: non-positive P0");
  if (noise_sigma < 0.0 || noise_sigma > 0.02) {
    throw DataError("spec: noise_sigma must be in [0, 0.02]");
  }
  if (drift_max < 0.0 || drift_max > 0.05) {
    throw DataError("spec: drift_max must be in [0, 0.05]");
  }
  if (r0_per_h <= 0.0) throw DataError("spec: non-positive base rate");
  if (gradual_tf_min_h <= 0.0 || gradual_tf_max_frac <= 0.0 ||
      gradual_tf_max_frac >= 1.0) {
    throw DataError("spec: bad gradual failure-time bounds");
  }
  // Every degraded device must produce a sample below the criterion within
  // the horizon even at the clipped noise extreme.
  const double tail =
      std::pow(kFailureFraction, 1.0 / gradual_tf_max_frac);
  if (tail + kNoiseClip * noise_sigma >= kFailureFraction) {
    throw DataError("spec: gradual devices may not cross the failure "
                    "criterion within the horizon; lower gradual_tf_max_frac "
                    "or noise_sigma");
  }
  if (sudden_drop_min <= 0.0 || sudden_drop_min > sudden_drop_max ||
      sudden_drop_max + kNoiseClip * noise_sigma >= kFailureFraction) {
    throw DataError("spec: bad sudden drop range");
  }
  if (sudden_tf_min_h <= 0.0 || sudden_tf_min_h > sudden_tf_max_h ||
      sudden_tf_max_h > horizon_h - interval_h) {
    throw DataError("spec: bad sudden failure-time range");
  }
  if (seq_len < 2 || stride < 1) throw DataError("spec: bad windowing");
  if (train_fraction <= 0.0 || train_fraction >= 1.0 ||
      test_normal_fraction <= 0.0 || test_normal_fraction >= 1.0) {
    throw DataError("spec: fractions must lie in (0, 1)");
  }
}

double arrhenius_factor(double temp_c, double ref_temp_c, double ea_over_k) {
  const double tk = temp_c + 273.15;
  const double rk = ref_temp_c + 273.15;
  return std::exp(-ea_over_k * (1.0 / tk - 1.0 / rk));
}

double gradual_rate(const DatasetSpec& spec, const OperatingConditions& oc) {
  return spec.r0_per_h * arrhenius_factor(oc.temperature_c, 70.0, spec.ea_over_k) *
         std::pow(oc.current_ma / spec.i_ref_ma, spec.gamma_current);
}

namespace {

double clipped_gaussian(Rng& rng, double sigma) {
  return std::clamp(gaussian(rng), -kNoiseClip, kNoiseClip) * sigma;
}

// Relative stress factor in [~0.15, 1] used to scale normal drift with oc.
double stress_fraction(const DatasetSpec& spec, const OperatingConditions& oc) {
  const double m = arrhenius_factor(oc.temperature_c, 70.0, spec.ea_over_k) *
                   std::pow(oc.current_ma / spec.i_ref_ma, spec.gamma_current);
  const double m_ref = arrhenius_factor(90.0, 70.0, spec.ea_over_k);
  return std::clamp(m / m_ref, 0.15, 1.0);
}

}  // namespace

DeviceTrace simulate_device(Kind kind, const OperatingConditions& oc,
                            const DatasetSpec& spec,
                            std::uint64_t device_index) {
  spec.validate();
  Rng rng(mix_seed(spec.seed ^ (0x9e37ULL * (std::uint64_t)(spec.batch_id + 1)),
                   device_index));

  const double level =
      1.0 - spec.level_temp_coeff * (oc.temperature_c - 70.0) / 20.0;
  const double p0 =
      spec.p0_mean_mw * (1.0 + spec.p0_spread * uniform(rng, -1.0, 1.0)) * level;
  if (p0 <= 0.0) throw DataError("simulate_device: non-positive P0");

  const std::size_t n =
      static_cast<std::size_t>(std::floor(spec.horizon_h / spec.interval_h)) + 1;

  DeviceTrace tr;
  tr.batch_id = spec.batch_id;
  tr.oc = oc;
  tr.kind = kind;
  tr.p0_mw = p0;
  tr.times_h.resize(n);
  tr.power_mw.resize(n);

  // normal-operation drift, scaled with operating-condition stress
  const double drift_total = -spec.drift_max * stress_fraction(spec, oc) *
                             uniform(rng, 0.3, 1.0);

  double grad_rate_r = 0.0, sudden_tf = 0.0, sudden_u = 0.0;
  switch (kind) {
    case Kind::normal:
      break;
    case Kind::gradual: {
      const double t_base = std::log(1.0 / kFailureFraction) / gradual_rate(spec, oc);
      const double t_f = std::clamp(
          t_base * std::exp(spec.rate_jitter_sigma * gaussian(rng)),
          spec.gradual_tf_min_h, spec.gradual_tf_max_frac * spec.horizon_h);
      grad_rate_r = std::log(1.0 / kFailureFraction) / t_f;
      break;
    }
    case Kind::sudden:
      sudden_tf = uniform(rng, spec.sudden_tf_min_h, spec.sudden_tf_max_h);
      sudden_u = uniform(rng, spec.sudden_drop_min, spec.sudden_drop_max);
      break;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * spec.interval_h;
    double p = 0.0;
    switch (kind) {
      case Kind::normal:
        p = p0 * (1.0 + drift_total * t / spec.horizon_h);
        break;
      case Kind::gradual:
        p = p0 * std::exp(-grad_rate_r * t);
        break;
      case Kind::sudden:
        p = t < sudden_tf ? p0 * (1.0 + drift_total * t / spec.horizon_h)
                          : p0 * sudden_u;
        break;
    }
    p += p0 * clipped_gaussian(rng, spec.noise_sigma);
    tr.times_h[i] = t;
    tr.power_mw[i] = p;
    if (!tr.failure_time_h && p < kFailureFraction * p0) {
      tr.failure_time_h = t;
    }
  }

  if (kind == Kind::normal && tr.failure_time_h) {
    throw NumericError("simulate_device: normal device crossed the criterion");
  }
  if (kind != Kind::normal && !tr.failure_time_h) {
    throw NumericError("simulate_device: degraded device never crossed the "
                       "criterion");
  }
  return tr;
}

std::vector<PowerWindow> windows(const DeviceTrace& trace, int seq_len,
                                 int stride) {
  const std::size_t n = trace.power_mw.size();
  const std::size_t w = static_cast<std::size_t>(seq_len);
  if (seq_len < 1 || n < w) {
    throw ShapeError("windows: trace shorter than seq_len");
  }
  std::vector<PowerWindow> out;
  for (std::size_t start = 0; start + w <= n;
       start += static_cast<std::size_t>(stride)) {
    PowerWindow pw;
    pw.values.assign(trace.power_mw.begin() + start,
                     trace.power_mw.begin() + start + w);
    pw.oc = trace.oc;
    pw.kind = trace.kind;
    pw.label = trace.failure_time_h ? Label::degraded : Label::normal;
    pw.device_id = trace.id;
    pw.batch_id = trace.batch_id;
    pw.t_start_h = trace.times_h[start];
    out.push_back(std::move(pw));
  }
  return out;
}

NormStats normalize_fit(const std::vector<PowerWindow>& train_windows) {
  if (train_windows.empty()) throw DataError("normalize_fit: no windows");
  NormStats s;
  s.p_min = s.t_min = s.i_min = std::numeric_limits<double>::infinity();
  s.p_max = s.t_max = s.i_max = -std::numeric_limits<double>::infinity();
  for (const PowerWindow& w : train_windows) {
    for (double v : w.values) {
      s.p_min = std::min(s.p_min, v);
      s.p_max = std::max(s.p_max, v);
    }
    s.t_min = std::min(s.t_min, w.oc.temperature_c);
    s.t_max = std::max(s.t_max, w.oc.temperature_c);
    s.i_min = std::min(s.i_min, w.oc.current_ma);
    s.i_max = std::max(s.i_max, w.oc.current_ma);
  }
  s.validate();
  return s;
}

PowerWindow normalize_apply(const NormStats& stats, const PowerWindow& w) {
  if (w.normalized) throw DataError("normalize_apply: already normalized");
  PowerWindow out = w;
  for (double& v : out.values) v = stats.norm_power(v);
  out.oc.temperature_c = stats.norm_temp(w.oc.temperature_c);
  out.oc.current_ma = stats.norm_current(w.oc.current_ma);
  out.normalized = true;
  return out;
}

namespace {

void sort_windows(std::vector<PowerWindow>& ws) {
  std::sort(ws.begin(), ws.end(), [](const PowerWindow& a, const PowerWindow& b) {
    if (a.device_id != b.device_id) return a.device_id < b.device_id;
    return a.t_start_h < b.t_start_h;
  });
}

// Windows of one device entering a labeled partition. Monitoring of a
// degraded device stops once the criterion trips, so only windows starting
// at or before the failure time are kept. A sudden-failure device behaves
// nominally until the drop, so its earlier windows carry no signal and
// would be mislabeled as degraded; only windows covering the drop are kept.
std::vector<PowerWindow> device_windows(const DeviceTrace& tr,
                                        const DatasetSpec& spec) {
  std::vector<PowerWindow> ws = windows(tr, spec.seq_len, spec.stride);
  if (tr.failure_time_h) {
    const double span = (spec.seq_len - 1) * spec.interval_h;
    std::erase_if(ws, [&](const PowerWindow& w) {
      if (w.t_start_h > *tr.failure_time_h) return true;
      return tr.kind == Kind::sudden &&
             w.t_start_h + span < *tr.failure_time_h;
    });
  }
  return ws;
}

}  // namespace

Dataset build_dataset(const DatasetSpec& spec) {
  spec.validate();

  std::vector<DeviceTrace> traces;
  std::uint64_t index = 0;
  for (const OperatingConditions& oc : spec.oc_grid) {
    auto emit = [&](Kind kind, int count) {
      for (int j = 0; j < count; ++j, ++index) {
        DeviceTrace tr = simulate_device(kind, oc, spec, index);
        std::ostringstream id;
        id << "b" << spec.batch_id << "-d" << index << "-" << to_string(kind);
        tr.id = id.str();
        traces.push_back(std::move(tr));
      }
    };
    emit(Kind::normal, spec.normal_per_cell);
    emit(Kind::gradual, spec.gradual_per_cell);
    emit(Kind::sudden, spec.sudden_per_cell);
  }

  std::vector<std::size_t> normal_ids, degraded_ids;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    (traces[i].failure_time_h ? degraded_ids : normal_ids).push_back(i);
  }
  if (degraded_ids.empty()) {
    throw DataError("build_dataset: no degraded devices for the requested "
                    "test composition");
  }
  if (normal_ids.empty()) throw DataError("build_dataset: no normal devices");

  Rng split_rng(mix_seed(spec.seed, 0xA11CEULL));
  std::shuffle(normal_ids.begin(), normal_ids.end(), split_rng);
  std::shuffle(degraded_ids.begin(), degraded_ids.end(), split_rng);

  const std::size_t n_train = static_cast<std::size_t>(
      std::llround(spec.train_fraction * static_cast<double>(normal_ids.size())));
  if (n_train == 0 || n_train >= normal_ids.size()) {
    throw DataError("build_dataset: train fraction leaves an empty partition");
  }

  Dataset ds;
  std::vector<std::size_t> test_norm_devs, calib_norm_devs;
  for (std::size_t k = 0; k < normal_ids.size(); ++k) {
    if (k < n_train) {
      auto ws = device_windows(traces[normal_ids[k]], spec);
      ds.train.insert(ds.train.end(), ws.begin(), ws.end());
    } else {
      ((k - n_train) % 2 == 0 ? test_norm_devs : calib_norm_devs)
          .push_back(normal_ids[k]);
    }
  }

  std::vector<std::size_t> test_deg_devs, calib_deg_devs;
  std::size_t eligible_seen = 0;
  for (std::size_t id : degraded_ids) {
    const bool eligible = *traces[id].failure_time_h > kEarlyTestCutoffH;
    if (eligible) {
      (eligible_seen++ % 2 == 0 ? test_deg_devs : calib_deg_devs).push_back(id);
    } else {
      calib_deg_devs.push_back(id);
    }
  }
  if (test_deg_devs.empty() || calib_deg_devs.empty()) {
    throw DataError("build_dataset: not enough degraded devices failing "
                    "after 5,000 h");
  }

  std::vector<PowerWindow> test_deg, test_norm_pool;
  for (std::size_t id : test_deg_devs) {
    auto ws = device_windows(traces[id], spec);
    test_deg.insert(test_deg.end(), ws.begin(), ws.end());
  }
  for (std::size_t id : test_norm_devs) {
    auto ws = device_windows(traces[id], spec);
    test_norm_pool.insert(test_norm_pool.end(), ws.begin(), ws.end());
  }
  sort_windows(test_deg);
  sort_windows(test_norm_pool);

  const double f = spec.test_normal_fraction;
  const std::size_t want_norm = static_cast<std::size_t>(
      std::llround(static_cast<double>(test_deg.size()) * f / (1.0 - f)));
  if (test_norm_pool.size() < want_norm) {
    throw DataError("build_dataset: too few normal windows for the requested "
                    "test composition");
  }
  ds.test = test_deg;
  ds.test.insert(ds.test.end(), test_norm_pool.begin(),
                 test_norm_pool.begin() + static_cast<std::ptrdiff_t>(want_norm));

  for (std::size_t id : calib_deg_devs) {
    auto ws = device_windows(traces[id], spec);
    ds.calib.insert(ds.calib.end(), ws.begin(), ws.end());
  }
  for (std::size_t id : calib_norm_devs) {
    auto ws = device_windows(traces[id], spec);
    ds.calib.insert(ds.calib.end(), ws.begin(), ws.end());
  }

  sort_windows(ds.train);
  sort_windows(ds.calib);
  sort_windows(ds.test);
  return ds;
}

DatasetSpec batch_shift(const DatasetSpec& spec, const BatchShift& shift) {
  for (double f : {shift.p0_factor, shift.noise_factor, shift.rate_factor}) {
    if (f < 0.5 || f > 2.0) {
      throw DataError("batch_shift: factor outside [0.5, 2]");
    }
  }
  DatasetSpec out = spec;
  out.p0_mean_mw *= shift.p0_factor;
  out.noise_sigma *= shift.noise_factor;
  out.r0_per_h *= shift.rate_factor;
  if (shift.extend_oc_grid) {
    std::set<double> temps{50.0}, currents{20.0};
    for (const auto& oc : spec.oc_grid) {
      temps.insert(oc.temperature_c);
      currents.insert(oc.current_ma);
    }
    out.oc_grid.clear();
    for (double t : temps) {
      for (double i : currents) out.oc_grid.push_back({t, i});
    }
  }
  return out;
}

// ---- CSV / spec files ----

namespace {

std::string csv_header(int seq_len) {
  std::string h = "device_id,batch_id,kind,label,T_C,I_mA,t_start_h";
  for (int i = 0; i < seq_len; ++i) h += ",x" + std::to_string(i);
  return h;
}

}  // namespace

void write_windows_csv(const std::string& path,
                       const std::vector<PowerWindow>& ws, int seq_len) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << csv_header(seq_len) << "\n";
  out.precision(17);
  for (const PowerWindow& w : ws) {
    if (w.normalized) throw DataError("write_windows_csv: CSV stores raw windows");
    if (w.values.size() != static_cast<std::size_t>(seq_len)) {
      throw DataError("write_windows_csv: inconsistent window length");
    }
    out << w.device_id << "," << w.batch_id << "," << to_string(w.kind) << ","
        << to_string(w.label) << "," << w.oc.temperature_c << ","
        << w.oc.current_ma << "," << w.t_start_h;
    for (double v : w.values) out << "," << v;
    out << "\n";
  }
}

std::vector<PowerWindow> read_windows_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV " + path);
  // tolerate any window length; infer it from the header
  int seq_len = 0;
  {
    std::stringstream hs(line);
    std::string col;
    std::vector<std::string> cols;
    while (std::getline(hs, col, ',')) cols.push_back(col);
    if (cols.size() < 8 || line.rfind("device_id,batch_id,kind,label,T_C,I_mA,t_start_h", 0) != 0) {
      throw DataError("bad CSV header in " + path);
    }
    seq_len = static_cast<int>(cols.size()) - 7;
  }
  std::vector<PowerWindow> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != static_cast<std::size_t>(seq_len) + 7) {
      throw DataError(path + ": wrong field count on line " +
                      std::to_string(lineno));
    }
    try {
      PowerWindow w;
      w.device_id = fields[0];
      w.batch_id = std::stoi(fields[1]);
      w.kind = kind_from_string(fields[2]);
      w.label = label_from_string(fields[3]);
      w.oc.temperature_c = std::stod(fields[4]);
      w.oc.current_ma = std::stod(fields[5]);
      w.t_start_h = std::stod(fields[6]);
      for (int i = 0; i < seq_len; ++i) {
        w.values.push_back(std::stod(fields[7 + static_cast<std::size_t>(i)]));
      }
      require_finite(w.values, "CSV power values");
      out.push_back(std::move(w));
    } catch (const std::invalid_argument&) {
      throw DataError(path + ": unparsable number on line " +
                      std::to_string(lineno));
    }
  }
  return out;
}

void write_spec(const std::string& path, const DatasetSpec& s) {
  json grid = json::array();
  for (const auto& oc : s.oc_grid) {
    grid.push_back({{"T_C", oc.temperature_c}, {"I_mA", oc.current_ma}});
  }
  json j{{"format", "laserprog-dataset-spec"},
         {"version", 1},
         {"oc_grid", grid},
         {"normal_per_cell", s.normal_per_cell},
         {"gradual_per_cell", s.gradual_per_cell},
         {"sudden_per_cell", s.sudden_per_cell},
         {"horizon_h", s.horizon_h},
         {"interval_h", s.interval_h},
         {"p0_mean_mw", s.p0_mean_mw},
         {"p0_spread", s.p0_spread},
         {"noise_sigma", s.noise_sigma},
         {"drift_max", s.drift_max},
         {"level_temp_coeff", s.level_temp_coeff},
         {"r0_per_h", s.r0_per_h},
         {"ea_over_k", s.ea_over_k},
         {"gamma_current", s.gamma_current},
         {"i_ref_ma", s.i_ref_ma},
         {"rate_jitter_sigma", s.rate_jitter_sigma},
         {"gradual_tf_min_h", s.gradual_tf_min_h},
         {"gradual_tf_max_frac", s.gradual_tf_max_frac},
         {"sudden_tf_min_h", s.sudden_tf_min_h},
         {"sudden_tf_max_h", s.sudden_tf_max_h},
         {"sudden_drop_min", s.sudden_drop_min},
         {"sudden_drop_max", s.sudden_drop_max},
         {"seq_len", s.seq_len},
         {"stride", s.stride},
         {"train_fraction", s.train_fraction},
         {"test_normal_fraction", s.test_normal_fraction},
         {"seed", s.seed},
         {"batch_id", s.batch_id}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(1) << "\n";
}

DatasetSpec read_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("spec parse error: " + std::string(e.what()));
  }
  try {
    if (j.at("format").get<std::string>() != "laserprog-dataset-spec" ||
        j.at("version").get<int>() != 1) {
      throw DataError("unsupported dataset spec file " + path);
    }
    DatasetSpec s;
    s.oc_grid.clear();
    for (const json& cell : j.at("oc_grid")) {
      s.oc_grid.push_back(
          {cell.at("T_C").get<double>(), cell.at("I_mA").get<double>()});
    }
    s.normal_per_cell = j.at("normal_per_cell").get<int>();
    s.gradual_per_cell = j.at("gradual_per_cell").get<int>();
    s.sudden_per_cell = j.at("sudden_per_cell").get<int>();
    s.horizon_h = j.at("horizon_h").get<double>();
    s.interval_h = j.at("interval_h").get<double>();
    s.p0_mean_mw = j.at("p0_mean_mw").get<double>();
    s.p0_spread = j.at("p0_spread").get<double>();
    s.noise_sigma = j.at("noise_sigma").get<double>();
    s.drift_max = j.at("drift_max").get<double>();
    s.level_temp_coeff = j.at("level_temp_coeff").get<double>();
    s.r0_per_h = j.at("r0_per_h").get<double>();
    s.ea_over_k = j.at("ea_over_k").get<double>();
    s.gamma_current = j.at("gamma_current").get<double>();
    s.i_ref_ma = j.at("i_ref_ma").get<double>();
    s.rate_jitter_sigma = j.at("rate_jitter_sigma").get<double>();
    s.gradual_tf_min_h = j.at("gradual_tf_min_h").get<double>();
    s.gradual_tf_max_frac = j.at("gradual_tf_max_frac").get<double>();
    s.sudden_tf_min_h = j.at("sudden_tf_min_h").get<double>();
    s.sudden_tf_max_h = j.at("sudden_tf_max_h").get<double>();
    s.sudden_drop_min = j.at("sudden_drop_min").get<double>();
    s.sudden_drop_max = j.at("sudden_drop_max").get<double>();
    s.seq_len = j.at("seq_len").get<int>();
    s.stride = j.at("stride").get<int>();
    s.train_fraction = j.at("train_fraction").get<double>();
    s.test_normal_fraction = j.at("test_normal_fraction").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.batch_id = j.at("batch_id").get<int>();
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw DataError("spec schema violation: " + std::string(e.what()));
  }
}

}  // namespace laserprog
