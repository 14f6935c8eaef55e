#pragma once

#include <functional>
#include <vector>

#include "geotr/tensor.hpp"

namespace geotr {

// A scalar-valued function together with the parameters it reads and its
// analytic gradient. Runs in double so the finite-difference step h=1e-5
// sits well above rounding noise.
struct GradCheckProblem {
  std::function<double()> value;
  std::vector<DTensor*> params;
  std::function<std::vector<DTensor>()> analytic;
};

// Max over all parameter elements of
//   |analytic - central| / max(|analytic|, |central|, 1e-8).
inline double grad_check(const GradCheckProblem& p, double h = 1e-5) {
  std::vector<DTensor> grads = p.analytic();
  if (grads.size() != p.params.size())
    throw DimensionError("grad_check: gradient count mismatch");
  for (const DTensor& g : grads) ensure_finite(g, "grad_check analytic");

  double worst = 0.0;
  for (std::size_t pi = 0; pi < p.params.size(); ++pi) {
    DTensor& t = *p.params[pi];
    if (!grads[pi].same_shape(t))
      throw DimensionError("grad_check: gradient shape mismatch");
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      const double saved = t.data[i];
      t.data[i] = saved + h;
      const double up = p.value();
      t.data[i] = saved - h;
      const double down = p.value();
      t.data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grads[pi].data[i];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace geotr
