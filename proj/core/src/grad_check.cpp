#include "laserprog/grad_check.hpp"

#include <cmath>

namespace laserprog {

double grad_check(const std::function<double(const ParamSet&)>& loss_fn,
                  ParamSet& ps, double h) {
  const double l0 = loss_fn(ps);
  const double l1 = loss_fn(ps);
  if (l0 != l1) {
    throw NumericError("grad_check: loss_fn is not deterministic");
  }

  double worst = 0.0;
  for (std::size_t id = 0; id < ps.count(); ++id) {
    ParamArray& p = ps.at(id);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value.a[i];
      p.value.a[i] = saved + h;
      const double lp = loss_fn(ps);
      p.value.a[i] = saved - h;
      const double lm = loss_fn(ps);
      p.value.a[i] = saved;
      const double numeric = (lp - lm) / (2.0 * h);
      const double analytic = p.grad.a[i];
      const double denom =
          std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      worst = std::max(worst, std::fabs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace laserprog
