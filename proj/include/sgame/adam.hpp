#pragma once

#include <cmath>
#include <utility>

#include "sgame/param_vector.hpp"

namespace sgame {

// Bias-corrected Adam, pure-functional: adam_step returns the updated state
// and parameters, inputs untouched. Ascent convention (params move along +grad);
// pass the negative gradient to descend.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  ParamVector m;
  ParamVector v;

  static AdamState init(int dim, double lr) {
    AdamState s;
    s.lr = lr;
    s.m = ParamVector::zeros(dim);
    s.v = ParamVector::zeros(dim);
    return s;
  }
};

inline std::pair<AdamState, ParamVector> adam_step(const AdamState& state,
                                                   const ParamVector& params,
                                                   const ParamVector& grad) {
  require(params.dim() == grad.dim(), "adam_step: param/grad dim mismatch");
  require(state.m.dim() == params.dim(), "adam_step: state dim mismatch");
  grad.check_finite("adam_step gradient");

  AdamState s = state;
  s.step_count += 1;
  ParamVector out = params;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step_count));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step_count));
  for (int i = 0; i < params.dim(); ++i) {
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grad[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    const double mhat = s.m[i] / bc1;
    const double vhat = s.v[i] / bc2;
    out[i] += s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
  out.check_finite("adam_step parameters");
  return {std::move(s), std::move(out)};
}

// Rescale grad in place so its 2-norm is at most max_norm (<=0 disables).
inline void clip_grad_norm(ParamVector& grad, double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = norm2(grad);
  if (n > max_norm) grad *= max_norm / n;
}

}  // namespace sgame
