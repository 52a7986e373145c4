#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "laserprog/types.hpp"

namespace laserprog {

// One device's full aging trace at uniform sampling times.
struct DeviceTrace {
  std::string id;
  int batch_id = 0;
  OperatingConditions oc;
  Vec times_h;
  Vec power_mw;
  Kind kind = Kind::normal;
  std::optional<double> failure_time_h;  // first sample below 0.8 * P0
  double p0_mw = 0.0;                    // noise-free initial power
};

// Simulation parameters for one batch of accelerated-aging devices.
struct DatasetSpec {
  std::vector<OperatingConditions> oc_grid{
      {70.0, 10.0}, {70.0, 15.0}, {90.0, 10.0}, {90.0, 15.0}};
  int normal_per_cell = 36;
  int gradual_per_cell = 14;
  int sudden_per_cell = 7;

  double horizon_h = 15000.0;
  double interval_h = 833.0;  // 6 samples span 5,000 h

  double p0_mean_mw = 1.0;
  double p0_spread = 0.10;     // device-to-device initial power spread
  double noise_sigma = 0.005;  // additive noise, fraction of device P0
  double drift_max = 0.05;     // |d * horizon| cap for normal devices
  double level_temp_coeff = 0.03;  // output-power derating per +20 C

  // Gradual decay: r(oc) = r0 * AF(T) * (I / I_ref)^gamma with
  // AF(T) = exp(-Ea/k (1/T_K - 1/T_ref_K)), T_ref = 70 C. The default
  // Ea/k makes the 90 C rate about 3x the 70 C rate.
  double r0_per_h = 2.6e-5;
  double ea_over_k = 6845.0;
  double gamma_current = 2.0;
  double i_ref_ma = 15.0;
  double rate_jitter_sigma = 0.25;  // lognormal jitter on the failure time
  double gradual_tf_min_h = 1800.0;
  double gradual_tf_max_frac = 0.80;  // of the horizon, so every device fails

  double sudden_tf_min_h = 4000.0;
  double sudden_tf_max_h = 13000.0;
  double sudden_drop_min = 0.3;  // post-failure power as fraction of P0
  double sudden_drop_max = 0.7;

  int seq_len = 6;
  int stride = 1;
  double train_fraction = 0.8;
  double test_normal_fraction = 0.25;  // test is 25% normal / 75% degraded
  std::uint64_t seed = 42;
  int batch_id = 0;

  void validate() const;
};

double arrhenius_factor(double temp_c, double ref_temp_c, double ea_over_k);
double gradual_rate(const DatasetSpec& spec, const OperatingConditions& oc);

DeviceTrace simulate_device(Kind kind, const OperatingConditions& oc,
                            const DatasetSpec& spec,
                            std::uint64_t device_index);

// Sliding windows over a trace. Labels are device-level: every window of a
// device with a recorded failure time is degraded, including windows that
// precede the failure.
std::vector<PowerWindow> windows(const DeviceTrace& trace, int seq_len,
                                 int stride);

NormStats normalize_fit(const std::vector<PowerWindow>& train_windows);
PowerWindow normalize_apply(const NormStats& stats, const PowerWindow& w);

struct Dataset {
  std::vector<PowerWindow> train;  // normal-only, raw
  std::vector<PowerWindow> calib;  // labeled, raw
  std::vector<PowerWindow> test;   // labeled, raw; 25/75 normal/degraded
};

// Deterministic device-level split: no device contributes to more than one
// partition; test degraded windows come only from devices failing after
// 5,000 h; a disjoint labeled calibration partition is emitted for
// threshold fitting.
Dataset build_dataset(const DatasetSpec& spec);

// Bounded perturbation emulating a different wafer/batch.
struct BatchShift {
  double p0_factor = 1.0;
  double noise_factor = 1.0;
  double rate_factor = 1.0;
  bool extend_oc_grid = false;  // adds 50 C rows and a 20 mA column
};

DatasetSpec batch_shift(const DatasetSpec& spec, const BatchShift& shift);

// Dataset CSV: device_id,batch_id,kind,label,T_C,I_mA,t_start_h,x0..x5
void write_windows_csv(const std::string& path,
                       const std::vector<PowerWindow>& ws, int seq_len);
std::vector<PowerWindow> read_windows_csv(const std::string& path);

void write_spec(const std::string& path, const DatasetSpec& spec);
DatasetSpec read_spec(const std::string& path);

}  // namespace laserprog
