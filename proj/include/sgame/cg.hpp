#pragma once

#include <functional>
#include <utility>

#include "sgame/surrogates.hpp"

namespace sgame {

struct CgConfig {
  int max_iters = 20;
  double rel_tol = 1e-3;
  double lambda = 5.0;
};

struct CgReport {
  ParamVector solution;
  int iters_used = 0;
  double final_rel_residual = 0.0;
  bool converged = false;
  bool lambda_floored = false;  // set by solve_response when lambda hit the internal floor
};

// Plain conjugate gradient from x0 = 0 on apply_A, assumed symmetric positive
// definite. Residual is tracked recursively; tests cross-check it against a
// recomputed ||A x - b||/||b||. A non-positive p^T A p stops the iteration
// with the current iterate and converged = false (the caller proceeds with the
// best iterate). Non-finite numbers raise NumericsError.
inline CgReport conjugate_gradient(const std::function<ParamVector(const ParamVector&)>& apply_A,
                                   const ParamVector& b, const CgConfig& cfg) {
  require(cfg.max_iters >= 1, "conjugate_gradient: max_iters must be positive");
  require(cfg.rel_tol > 0.0, "conjugate_gradient: rel_tol must be positive");
  b.check_finite("conjugate_gradient rhs");

  CgReport rep;
  rep.solution = ParamVector::zeros(b.dim());
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    rep.converged = true;
    return rep;
  }

  ParamVector r = b;  // residual of x0 = 0
  ParamVector p = b;
  double rs = dot(r, r);
  for (int it = 0; it < cfg.max_iters; ++it) {
    const ParamVector ap = apply_A(p);
    ap.check_finite("conjugate_gradient A*p");
    const double pap = dot(p, ap);
    require_finite(pap, "conjugate_gradient curvature");
    if (pap <= 0.0) break;  // operator not SPD along p; keep current iterate
    const double alpha = rs / pap;
    axpy(alpha, p, rep.solution);
    axpy(-alpha, ap, r);
    const double rs_new = dot(r, r);
    require_finite(rs_new, "conjugate_gradient residual");
    rep.iters_used = it + 1;
    rep.final_rel_residual = std::sqrt(rs_new) / bnorm;
    if (rep.final_rel_residual <= cfg.rel_tol) {
      rep.converged = true;
      break;
    }
    p *= rs_new / rs;
    p += r;
    rs = rs_new;
  }
  rep.solution.check_finite("conjugate_gradient solution");
  return rep;
}

// Damped response solve (curvature + lambda I) x = rhs over the frozen batch.
// lambda = 0 is allowed at the API; the solver floors it at 1e-8 and flags the
// report, since the undamped sample Fisher is typically singular.
inline CgReport solve_response(const FisherOperator& op, const ParamVector& rhs,
                               const CgConfig& cfg) {
  return conjugate_gradient([&op](const ParamVector& v) { return op.apply(v); }, rhs, cfg);
}

constexpr double kLambdaFloor = 1e-8;

inline CgReport solve_response(const RolloutBatch& batch, const PolicyFamily& follower,
                               const ParamVector& follower_params, const ParamVector& rhs,
                               const CgConfig& cfg) {
  const bool floored = cfg.lambda < kLambdaFloor;
  const double lam = floored ? kLambdaFloor : cfg.lambda;
  FisherOperator op(batch, follower, follower_params, lam);
  CgReport rep = solve_response(op, rhs, cfg);
  rep.lambda_floored = floored;
  return rep;
}

}  // namespace sgame
