#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "laserprog/errors.hpp"

namespace laserprog {

using Vec = std::vector<double>;

bool all_finite(std::span<const double> xs);
void require_finite(std::span<const double> xs, const char* what);

// Dense row-major matrix of doubles. A vector is a single-column matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return a[i * cols + j];
  }
  std::size_t size() const { return a.size(); }
};

// y = M x
Vec matvec(const Matrix& m, std::span<const double> x);
// y += M x
void matvec_acc(const Matrix& m, std::span<const double> x, Vec& y);
// y += M^T u
void mat_t_vec_acc(const Matrix& m, std::span<const double> u, Vec& y);
// G += u v^T
void outer_acc(Matrix& g, std::span<const double> u, std::span<const double> v);
// y += x
void add_acc(Vec& y, std::span<const double> x);

}  // namespace laserprog
