#pragma once

#include <stdexcept>
#include <string>

namespace laserprog {

// Shape or dimension disagreement between operands.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed files, bad labels, infeasible dataset compositions.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf where a finite value is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace laserprog
