#include "laserprog/matrix.hpp"

#include <cmath>

namespace laserprog {

bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void require_finite(std::span<const double> xs, const char* what) {
  if (!all_finite(xs)) {
    throw NumericError(std::string("non-finite values in ") + what);
  }
}

Vec matvec(const Matrix& m, std::span<const double> x) {
  Vec y(m.rows, 0.0);
  matvec_acc(m, x, y);
  return y;
}

void matvec_acc(const Matrix& m, std::span<const double> x, Vec& y) {
  if (x.size() != m.cols || y.size() != m.rows) {
    throw ShapeError("matvec: shape mismatch");
  }
  const double* a = m.a.data();
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    const double* row = a + i * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) s += row[j] * x[j];
    y[i] += s;
  }
}

void mat_t_vec_acc(const Matrix& m, std::span<const double> u, Vec& y) {
  if (u.size() != m.rows || y.size() != m.cols) {
    throw ShapeError("mat_t_vec: shape mismatch");
  }
  const double* a = m.a.data();
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double ui = u[i];
    const double* row = a + i * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) y[j] += row[j] * ui;
  }
}

void outer_acc(Matrix& g, std::span<const double> u,
               std::span<const double> v) {
  if (u.size() != g.rows || v.size() != g.cols) {
    throw ShapeError("outer_acc: shape mismatch");
  }
  double* a = g.a.data();
  for (std::size_t i = 0; i < g.rows; ++i) {
    const double ui = u[i];
    double* row = a + i * g.cols;
    for (std::size_t j = 0; j < g.cols; ++j) row[j] += ui * v[j];
  }
}

void add_acc(Vec& y, std::span<const double> x) {
  if (y.size() != x.size()) throw ShapeError("add_acc: shape mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
}

}  // namespace laserprog
