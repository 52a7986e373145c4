#include "laserprog/params.hpp"

#include <cmath>

namespace laserprog {

std::size_t ParamSet::add(std::string name, std::size_t rows,
                          std::size_t cols) {
  ParamArray p;
  p.name = std::move(name);
  p.value = Matrix(rows, cols);
  p.grad = Matrix(rows, cols);
  p.m = Matrix(rows, cols);
  p.v = Matrix(rows, cols);
  arrays_.push_back(std::move(p));
  return arrays_.size() - 1;
}

std::size_t ParamSet::add_uniform(std::string name, std::size_t rows,
                                  std::size_t cols, double scale, Rng& rng) {
  const std::size_t id = add(std::move(name), rows, cols);
  for (double& x : arrays_[id].value.a) x = uniform(rng, -scale, scale);
  return id;
}

std::size_t ParamSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    if (arrays_[i].name == name) return i;
  }
  throw DataError("ParamSet: no array named '" + std::string(name) + "'");
}

std::size_t ParamSet::coord_count() const {
  std::size_t n = 0;
  for (const auto& p : arrays_) n += p.value.size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& p : arrays_) {
    std::fill(p.grad.a.begin(), p.grad.a.end(), 0.0);
  }
}

void ParamSet::adam_step(double lr, double beta1, double beta2, double eps) {
  for (const auto& p : arrays_) {
    require_finite(p.grad.a, ("gradient of " + p.name).c_str());
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (auto& p : arrays_) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.a[i];
      p.m.a[i] = beta1 * p.m.a[i] + (1.0 - beta1) * g;
      p.v.a[i] = beta2 * p.v.a[i] + (1.0 - beta2) * g * g;
      const double mhat = p.m.a[i] / bc1;
      const double vhat = p.v.a[i] / bc2;
      p.value.a[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    std::fill(p.grad.a.begin(), p.grad.a.end(), 0.0);
  }
}

}  // namespace laserprog
