#pragma once

#include <cmath>
#include <vector>

#include "sgame/smg.hpp"

namespace sgame {

// PPO-style ratio clipping. eps must sit strictly inside (0, 1) when enabled.
struct ClipConfig {
  bool enabled = true;
  double eps = 0.2;

  static ClipConfig none() { return {false, 0.0}; }
  static ClipConfig with_eps(double e) { return {true, e}; }

  void validate() const {
    if (enabled) require(eps > 0.0 && eps < 1.0, "ClipConfig: eps must be in (0,1)");
  }
};

namespace detail {

// Standard PPO min-gate: once the ratio has crossed the clip boundary on the
// profitable side of the advantage, the step contributes zero gradient.
// Boundary counts as clipped. With clipping off the gradient is ratio*score*adv.
inline double ppo_step_weight(double ratio, double adv, const ClipConfig& clip) {
  if (clip.enabled) {
    if (adv > 0.0 && ratio >= 1.0 + clip.eps) return 0.0;
    if (adv < 0.0 && ratio <= 1.0 - clip.eps) return 0.0;
  }
  return ratio * adv;
}

// Leader factor of the cross surrogate carries no advantage; its ratio is
// hard-clamped, zero gradient anywhere outside the clip window.
inline double clamp_gate_weight(double ratio, const ClipConfig& clip) {
  if (clip.enabled && (ratio >= 1.0 + clip.eps || ratio <= 1.0 - clip.eps)) return 0.0;
  return ratio;
}

inline double ratio_at(const PolicyFamily& fam, const ParamVector& params, const StepRecord& s,
                       const Conditioning& cond) {
  const double lr = fam.logp(params, s.obs, cond, s.action) - s.behavior_logp;
  const double r = std::exp(lr);
  require_finite(r, "importance ratio");
  return r;
}

}  // namespace detail

// Clipped importance-ratio gradient of the leader's own surrogate in the
// leader parameters. Per-trajectory sums, mean over trajectories; at the
// behavior snapshot this is (1/N) sum score^L * adv^L.
inline ParamVector leader_direct_grad(const RolloutBatch& batch, const PolicyFamily& leader,
                                      const ParamVector& leader_params, const ClipConfig& clip) {
  clip.validate();
  ParamVector g(leader_params.dim());
  for (int i = 0; i < batch.size(); ++i) {
    const auto& tr = batch.trajs[i];
    const double w = batch.weight(i);
    for (const auto& s : tr.leader_steps) {
      const double r = detail::ratio_at(leader, leader_params, s, Conditioning{});
      const double c = detail::ppo_step_weight(r, s.advantage, clip);
      if (c != 0.0) axpy(w * c, leader.score(leader_params, s.obs, Conditioning{}, s.action), g);
    }
  }
  g.check_finite("leader_direct_grad");
  return g;
}

// Gradient in the follower parameters of the leader's follower-phase
// surrogate: the follower's clipped ratio surrogate weighted by follower
// advantages, scaled by the phase discount gamma^T. Right-hand side of the
// response solve.
inline ParamVector leader_grad_wrt_follower(const RolloutBatch& batch, const PolicyFamily& follower,
                                            const ParamVector& follower_params,
                                            const ClipConfig& clip, double gamma) {
  clip.validate();
  ParamVector g(follower_params.dim());
  for (int i = 0; i < batch.size(); ++i) {
    const auto& tr = batch.trajs[i];
    const double phase = std::pow(gamma, static_cast<double>(tr.leader_steps.size()));
    const double w = batch.weight(i) * phase;
    for (const auto& s : tr.follower_steps) {
      const double r = detail::ratio_at(follower, follower_params, s, tr.morphology);
      const double c = detail::ppo_step_weight(r, s.advantage, clip);
      if (c != 0.0) axpy(w * c, follower.score(follower_params, s.obs, tr.morphology, s.action), g);
    }
  }
  g.check_finite("leader_grad_wrt_follower");
  return g;
}

// Standard clipped PPO gradient of the follower's own objective. No phase
// discount: follower discounting restarts at the phase boundary.
inline ParamVector follower_ppo_grad(const RolloutBatch& batch, const PolicyFamily& follower,
                                     const ParamVector& follower_params, const ClipConfig& clip) {
  clip.validate();
  ParamVector g(follower_params.dim());
  for (int i = 0; i < batch.size(); ++i) {
    const auto& tr = batch.trajs[i];
    const double w = batch.weight(i);
    for (const auto& s : tr.follower_steps) {
      const double r = detail::ratio_at(follower, follower_params, s, tr.morphology);
      const double c = detail::ppo_step_weight(r, s.advantage, clip);
      if (c != 0.0) axpy(w * c, follower.score(follower_params, s.obs, tr.morphology, s.action), g);
    }
  }
  g.check_finite("follower_ppo_grad");
  return g;
}

// Per-trajectory factors of the cross derivative estimator, cached so the
// response solve and the final JVP reuse one score pass.
//   g_leader[i]: sum over leader steps of clamp-gated ratio * score (leader dim)
//   h_follower[i]: gamma^T * sum over follower steps of min-gated ratio * adv * score
struct TrajectoryScores {
  std::vector<ParamVector> g_leader;
  std::vector<ParamVector> h_follower;

  static TrajectoryScores build(const RolloutBatch& batch, const PolicyFamily& leader,
                                const ParamVector& leader_params, const PolicyFamily& follower,
                                const ParamVector& follower_params, const ClipConfig& clip,
                                double gamma) {
    clip.validate();
    TrajectoryScores ts;
    ts.g_leader.reserve(batch.size());
    ts.h_follower.reserve(batch.size());
    for (const auto& tr : batch.trajs) {
      ParamVector gl(leader_params.dim());
      for (const auto& s : tr.leader_steps) {
        const double r = detail::ratio_at(leader, leader_params, s, Conditioning{});
        const double c = detail::clamp_gate_weight(r, clip);
        if (c != 0.0) axpy(c, leader.score(leader_params, s.obs, Conditioning{}, s.action), gl);
      }
      ParamVector hf(follower_params.dim());
      const double phase = std::pow(gamma, static_cast<double>(tr.leader_steps.size()));
      for (const auto& s : tr.follower_steps) {
        const double r = detail::ratio_at(follower, follower_params, s, tr.morphology);
        const double c = detail::ppo_step_weight(r, s.advantage, clip);
        if (c != 0.0) axpy(phase * c, follower.score(follower_params, s.obs, tr.morphology, s.action), hf);
      }
      ts.g_leader.push_back(std::move(gl));
      ts.h_follower.push_back(std::move(hf));
    }
    return ts;
  }
};

// (1/N) sum_traj g_leader * (h_follower . v): the cross-derivative surrogate
// applied to a follower-dim vector, yielding a leader-dim vector.
inline ParamVector cross_jvp(const RolloutBatch& batch, const TrajectoryScores& ts,
                             const ParamVector& v) {
  require(static_cast<int>(ts.g_leader.size()) == batch.size(), "cross_jvp: cache size mismatch");
  require(ts.g_leader.size() == ts.h_follower.size(), "cross_jvp: cache size mismatch");
  ParamVector out(ts.g_leader.empty() ? 0 : ts.g_leader[0].dim());
  for (int i = 0; i < batch.size(); ++i) {
    const double hv = dot(ts.h_follower[i], v);
    axpy(batch.weight(i) * hv, ts.g_leader[i], out);
  }
  out.check_finite("cross_jvp");
  return out;
}

inline ParamVector cross_jvp(const RolloutBatch& batch, const PolicyFamily& leader,
                             const ParamVector& leader_params, const PolicyFamily& follower,
                             const ParamVector& follower_params, const ClipConfig& clip,
                             double gamma, const ParamVector& v) {
  const auto ts = TrajectoryScores::build(batch, leader, leader_params, follower, follower_params,
                                          clip, gamma);
  return cross_jvp(batch, ts, v);
}

// Frozen sample Fisher of the follower policy over all follower (s,a) pairs in
// the batch, per-step mean, plus lambda * I. Scores are computed once at
// construction; apply() is what CG iterates.
class FisherOperator {
 public:
  FisherOperator(const RolloutBatch& batch, const PolicyFamily& follower,
                 const ParamVector& follower_params, double lambda)
      : lambda_(lambda), dim_(follower_params.dim()) {
    double total_w = 0.0;
    for (int i = 0; i < batch.size(); ++i) {
      const auto& tr = batch.trajs[i];
      const double w = batch.weight(i);
      for (const auto& s : tr.follower_steps) {
        scores_.push_back(follower.score(follower_params, s.obs, tr.morphology, s.action));
        step_w_.push_back(w);
        total_w += w;
      }
    }
    require(total_w > 0.0, "FisherOperator: batch has no follower steps");
    inv_mass_ = 1.0 / total_w;
  }

  ParamVector apply(const ParamVector& v) const {
    require(v.dim() == dim_, "FisherOperator: dim mismatch");
    ParamVector out = v;
    out *= lambda_;
    for (std::size_t k = 0; k < scores_.size(); ++k) {
      const double sv = dot(scores_[k], v);
      axpy(step_w_[k] * inv_mass_ * sv, scores_[k], out);
    }
    out.check_finite("fisher_vp");
    return out;
  }

  double lambda() const { return lambda_; }

 private:
  std::vector<ParamVector> scores_;
  std::vector<double> step_w_;
  double inv_mass_ = 0.0;
  double lambda_ = 0.0;
  int dim_ = 0;
};

inline ParamVector fisher_vp(const RolloutBatch& batch, const PolicyFamily& follower,
                             const ParamVector& follower_params, const ParamVector& v,
                             double lambda) {
  return FisherOperator(batch, follower, follower_params, lambda).apply(v);
}

// Score-identity estimator of the follower objective's parameter Hessian
// applied to v: per trajectory, sum_k hvp_k(v) * adv_k plus the outer-product
// term (sum_k score_k) * ((sum_k score_k * adv_k) . v). Requires an analytic
// log-density Hessian from the family.
inline ParamVector analytic_hessian_vp(const RolloutBatch& batch, const PolicyFamily& follower,
                                       const ParamVector& follower_params, const ParamVector& v) {
  if (!follower.supports_logp_hvp())
    throw UnsupportedError("analytic_hessian_vp: policy family lacks logp_hvp");
  ParamVector out(follower_params.dim());
  for (int i = 0; i < batch.size(); ++i) {
    const auto& tr = batch.trajs[i];
    const double w = batch.weight(i);
    ParamVector score_sum(follower_params.dim());
    ParamVector weighted_score_sum(follower_params.dim());
    for (const auto& s : tr.follower_steps) {
      axpy(w * s.advantage, follower.logp_hvp(follower_params, s.obs, tr.morphology, s.action, v),
           out);
      const ParamVector sc = follower.score(follower_params, s.obs, tr.morphology, s.action);
      score_sum += sc;
      axpy(s.advantage, sc, weighted_score_sum);
    }
    axpy(w * dot(weighted_score_sum, v), score_sum, out);
  }
  out.check_finite("analytic_hessian_vp");
  return out;
}

// Curvature operator for the analytic-Hessian trainer mode: the Fisher's
// orientation is -E[logp_hvp], so the exact-Hessian stand-in enters negated,
// with the same lambda damping.
class AnalyticHessianOperator {
 public:
  AnalyticHessianOperator(const RolloutBatch& batch, const PolicyFamily& follower,
                          ParamVector follower_params, double lambda)
      : batch_(batch), follower_(follower), params_(std::move(follower_params)), lambda_(lambda) {}

  ParamVector apply(const ParamVector& v) const {
    ParamVector out = analytic_hessian_vp(batch_, follower_, params_, v);
    out *= -1.0;
    axpy(lambda_, v, out);
    return out;
  }

 private:
  const RolloutBatch& batch_;
  const PolicyFamily& follower_;
  ParamVector params_;
  double lambda_;
};

// Diagnostics used by the trainer's metric row.
inline double mean_follower_kl(const RolloutBatch& batch, const PolicyFamily& follower,
                               const ParamVector& new_params, const ParamVector& old_params) {
  double sum = 0.0;
  long n = 0;
  for (const auto& tr : batch.trajs)
    for (const auto& s : tr.follower_steps) {
      sum += follower.kl(new_params, old_params, s.obs, tr.morphology);
      ++n;
    }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

inline double follower_clip_fraction(const RolloutBatch& batch, const PolicyFamily& follower,
                                     const ParamVector& params, double eps) {
  long clipped = 0, n = 0;
  for (const auto& tr : batch.trajs)
    for (const auto& s : tr.follower_steps) {
      const double r = detail::ratio_at(follower, params, s, tr.morphology);
      if (std::abs(r - 1.0) > eps) ++clipped;
      ++n;
    }
  return n == 0 ? 0.0 : static_cast<double>(clipped) / static_cast<double>(n);
}

}  // namespace sgame
