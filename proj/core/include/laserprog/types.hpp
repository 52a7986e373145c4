#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "laserprog/errors.hpp"
#include "laserprog/matrix.hpp"

namespace laserprog {

enum class Kind { normal, gradual, sudden };
enum class Label { normal, degraded };

std::string to_string(Kind k);
std::string to_string(Label l);
Kind kind_from_string(std::string_view s);
Label label_from_string(std::string_view s);

struct OperatingConditions {
  double temperature_c = 0.0;
  double current_ma = 0.0;
};

// Min-max normalization statistics, fitted on training data only.
struct NormStats {
  double p_min = 0.0, p_max = 1.0;
  double t_min = 0.0, t_max = 1.0;
  double i_min = 0.0, i_max = 1.0;

  void validate() const {
    if (!(p_min < p_max) || !(t_min < t_max) || !(i_min < i_max)) {
      throw DataError("NormStats: min >= max on a channel");
    }
  }
  static double apply(double x, double lo, double hi) {
    return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
  }
  double norm_power(double p) const { return apply(p, p_min, p_max); }
  double norm_temp(double t) const { return apply(t, t_min, t_max); }
  double norm_current(double i) const { return apply(i, i_min, i_max); }
  double denorm_power(double x) const { return p_min + x * (p_max - p_min); }
};

// Fixed-length sequence of power samples plus operating conditions and the
// ground-truth device state. `values` and `oc` are raw as generated;
// normalize_apply produces the [0, 1] form consumed by the models.
struct PowerWindow {
  Vec values;
  OperatingConditions oc;
  Label label = Label::normal;
  Kind kind = Kind::normal;
  std::string device_id;
  int batch_id = 0;
  double t_start_h = 0.0;
  bool normalized = false;
};

}  // namespace laserprog
