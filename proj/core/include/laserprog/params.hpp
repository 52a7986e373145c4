#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "laserprog/matrix.hpp"
#include "laserprog/rng.hpp"

namespace laserprog {

// One learnable array with its gradient buffer and Adam moments.
struct ParamArray {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m;  // first moment
  Matrix v;  // second moment
};

// Ordered flat registry of all learnable arrays of a model. The Adam step
// counter is shared across arrays.
class ParamSet {
 public:
  // Adds a zero-initialized array.
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);
  // Adds an array initialized uniformly in [-scale, scale].
  std::size_t add_uniform(std::string name, std::size_t rows,
                          std::size_t cols, double scale, Rng& rng);

  ParamArray& at(std::size_t id) { return arrays_.at(id); }
  const ParamArray& at(std::size_t id) const { return arrays_.at(id); }
  std::size_t find(std::string_view name) const;  // throws if absent
  std::size_t count() const { return arrays_.size(); }
  std::size_t coord_count() const;

  void zero_grad();

  // Standard bias-corrected Adam update on every array; zeroes gradient
  // buffers and increments the shared step counter.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8);

  std::int64_t step_count() const { return step_; }

 private:
  std::vector<ParamArray> arrays_;
  std::int64_t step_ = 0;
};

// Glorot-style uniform init bound.
inline double glorot_scale(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace laserprog
