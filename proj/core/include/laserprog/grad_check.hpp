#pragma once

#include <functional>

#include "laserprog/params.hpp"

namespace laserprog {

// Compares the analytic gradients currently stored in the gradient buffers
// of `ps` against central finite differences of `loss_fn`, coordinate by
// coordinate. Returns the worst relative error with denominator
// max(|analytic|, |numeric|, 1e-8).
//
// `loss_fn` must be deterministic given the parameter values; this is
// verified by evaluating it twice up front. Parameter values are restored
// on return.
double grad_check(const std::function<double(const ParamSet&)>& loss_fn,
                  ParamSet& ps, double h = 1e-5);

}  // namespace laserprog
