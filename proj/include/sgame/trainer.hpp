#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sgame/advantage.hpp"
#include "sgame/cg.hpp"
#include "sgame/envs/chain_walker.hpp"
#include "sgame/envs/tabular_codesign.hpp"

namespace sgame {

enum class TrainMode { stackelberg, vanilla, analytic_hessian };

inline std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::stackelberg: return "stackelberg";
    case TrainMode::vanilla: return "vanilla";
    case TrainMode::analytic_hessian: return "analytic_hessian";
  }
  return "?";
}

struct TrainConfig {
  TrainMode mode = TrainMode::stackelberg;
  double fisher_lambda = 5.0;
  bool clip_enabled = true;
  double ppo_clip_eps = 0.2;
  double gamma = 0.995;
  double gae_lambda = 0.95;
  double leader_lr = 5e-5;
  double follower_lr = 5e-5;
  double value_lr = 3e-4;
  int value_epochs = 50;
  int ppo_iters_per_batch = 10;
  int batch_trajectories = 64;
  int epochs = 1000;
  int cg_max_iters = 20;
  double cg_rel_tol = 1e-3;
  bool normalize_advantages = true;
  double norm_eps = 1e-8;
  double max_grad_norm = 40.0;
  std::uint64_t seed = 1;

  ClipConfig clip() const { return clip_enabled ? ClipConfig::with_eps(ppo_clip_eps) : ClipConfig::none(); }
  CgConfig cg() const { return {cg_max_iters, cg_rel_tol, fisher_lambda}; }

  void validate() const {
    clip().validate();
    require(gamma > 0.0 && gamma <= 1.0, "TrainConfig: gamma out of range");
    require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "TrainConfig: gae_lambda out of range");
    require(leader_lr > 0.0 && follower_lr > 0.0 && value_lr > 0.0, "TrainConfig: lr must be positive");
    require(ppo_iters_per_batch >= 1, "TrainConfig: ppo_iters_per_batch must be positive");
    require(batch_trajectories >= 1, "TrainConfig: batch_trajectories must be positive");
    require(epochs >= 0, "TrainConfig: epochs must be nonnegative");
    require(cg_max_iters >= 1 && cg_rel_tol > 0.0, "TrainConfig: bad cg settings");
    require(fisher_lambda >= 0.0, "TrainConfig: fisher_lambda must be nonnegative");
    require(value_epochs >= 0, "TrainConfig: value_epochs must be nonnegative");
  }
};

// One assembled leader update. alpha rescales the response so it can never
// dominate the direct term: alpha = min(1, |direct| / (|response| + eps)),
// assembled = direct - alpha * response.
struct StackelbergGradient {
  ParamVector direct;
  ParamVector response;
  ParamVector assembled;
  double alpha = 1.0;
  double norm_direct = 0.0;
  double norm_response = 0.0;
  CgReport cg;
};

inline StackelbergGradient leader_stackelberg_grad(const RolloutBatch& batch,
                                                   const PolicyFamily& leader,
                                                   const ParamVector& leader_params,
                                                   const PolicyFamily& follower,
                                                   const ParamVector& follower_params,
                                                   const TrainConfig& cfg) {
  StackelbergGradient out;
  out.direct = leader_direct_grad(batch, leader, leader_params, cfg.clip());
  out.norm_direct = norm2(out.direct);
  if (cfg.mode == TrainMode::vanilla) {
    out.response = ParamVector::zeros(leader_params.dim());
    out.assembled = out.direct;
    out.cg.converged = true;
    return out;
  }

  const ParamVector rhs =
      leader_grad_wrt_follower(batch, follower, follower_params, cfg.clip(), cfg.gamma);
  if (cfg.mode == TrainMode::analytic_hessian) {
    const bool floored = cfg.fisher_lambda < kLambdaFloor;
    const double lam = floored ? kLambdaFloor : cfg.fisher_lambda;
    AnalyticHessianOperator op(batch, follower, follower_params, lam);
    out.cg = conjugate_gradient([&op](const ParamVector& v) { return op.apply(v); }, rhs, cfg.cg());
    out.cg.lambda_floored = floored;
  } else {
    out.cg = solve_response(batch, follower, follower_params, rhs, cfg.cg());
  }
  // CG non-convergence is not fatal: proceed with the best iterate.
  out.response = cross_jvp(batch, leader, leader_params, follower, follower_params, cfg.clip(),
                           cfg.gamma, out.cg.solution);
  out.norm_response = norm2(out.response);
  out.alpha = std::min(1.0, out.norm_direct / (out.norm_response + cfg.norm_eps));
  out.assembled = out.direct;
  axpy(-out.alpha, out.response, out.assembled);
  return out;
}

struct EpochMetrics {
  int epoch = 0;
  long env_steps = 0;  // cumulative leader + follower transitions
  double leader_return = 0.0;
  double follower_return = 0.0;
  double kl = 0.0;         // mean follower KL(new || behavior) after the epoch's updates
  double clip_frac = 0.0;  // follower steps with |ratio - 1| > eps at final params
  int cg_iters = 0;        // last leader update of the epoch
  bool cg_converged = true;
  double alpha = 1.0;
  double wall_ms = 0.0;
};

// One record per leader update, for bound checks across a whole run.
struct LeaderStepTrace {
  int epoch = 0;
  int ppo_iter = 0;
  double norm_direct = 0.0;
  double norm_response = 0.0;
  double alpha = 1.0;
  int cg_iters = 0;
  double cg_residual = 0.0;
  bool cg_converged = true;
  bool lambda_floored = false;
};

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  std::vector<LeaderStepTrace> leader_trace;
  ParamVector leader_params;
  ParamVector follower_params;
};

// Full training loop. Per epoch: collect a batch under the current snapshot,
// fit both value heads, compute (optionally whitened) advantages, then
// ppo_iters_per_batch alternating follower/leader updates against the same
// frozen batch. The leader gradient uses the full batch every iteration.
inline TrainResult train(const SmgSpec& env, const TrainConfig& cfg,
                         const std::function<void(const EpochMetrics&)>& on_epoch = {}) {
  cfg.validate();
  const RngKey key(cfg.seed);
  const auto leader = env.make_leader_policy();
  const auto follower = env.make_follower_policy();

  TrainResult res;
  {
    RngStream s = key.stream("init_leader");
    res.leader_params = leader->init_params(s);
  }
  {
    RngStream s = key.stream("init_follower");
    res.follower_params = follower->init_params(s);
  }
  if (cfg.epochs == 0) return res;

  AdamState leader_opt = AdamState::init(res.leader_params.dim(), cfg.leader_lr);
  AdamState follower_opt = AdamState::init(res.follower_params.dim(), cfg.follower_lr);
  ValueFunction leader_vf = ValueFunction::linear(env.leader_value_feature_dim(), "leader");
  ValueFunction follower_vf = ValueFunction::linear(env.follower_value_feature_dim(), "follower");
  AdamState leader_vf_opt = AdamState::init(leader_vf.params().dim(), cfg.value_lr);
  AdamState follower_vf_opt = AdamState::init(follower_vf.params().dim(), cfg.value_lr);

  const AdvantageConfig adv_cfg{cfg.gamma, cfg.gae_lambda};
  long env_steps = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      RolloutBatch batch =
          collect_rollouts(env, *leader, res.leader_params, *follower, res.follower_params,
                           cfg.batch_trajectories, key.child("epoch", epoch));
      for (const auto& tr : batch.trajs)
        env_steps += static_cast<long>(tr.leader_steps.size() + tr.follower_steps.size());

      compute_returns(batch, cfg.gamma);
      fit_value(leader_vf, batch, Phase::leader, leader_vf_opt, cfg.value_epochs);
      fit_value(follower_vf, batch, Phase::follower, follower_vf_opt, cfg.value_epochs);
      compute_leader_advantages(batch, leader_vf, adv_cfg);
      compute_follower_advantages(batch, follower_vf, adv_cfg);
      if (cfg.normalize_advantages) {
        normalize_advantages(batch, Phase::leader, cfg.norm_eps);
        normalize_advantages(batch, Phase::follower, cfg.norm_eps);
      }

      StackelbergGradient last_sg;
      for (int it = 0; it < cfg.ppo_iters_per_batch; ++it) {
        ParamVector fg = follower_ppo_grad(batch, *follower, res.follower_params, cfg.clip());
        clip_grad_norm(fg, cfg.max_grad_norm);
        auto [fopt, fparams] = adam_step(follower_opt, res.follower_params, fg);
        follower_opt = std::move(fopt);
        res.follower_params = std::move(fparams);

        last_sg = leader_stackelberg_grad(batch, *leader, res.leader_params, *follower,
                                          res.follower_params, cfg);
        ParamVector lg = last_sg.assembled;
        clip_grad_norm(lg, cfg.max_grad_norm);
        auto [lopt, lparams] = adam_step(leader_opt, res.leader_params, lg);
        leader_opt = std::move(lopt);
        res.leader_params = std::move(lparams);

        res.leader_trace.push_back({epoch, it, last_sg.norm_direct, last_sg.norm_response,
                                    last_sg.alpha, last_sg.cg.iters_used,
                                    last_sg.cg.final_rel_residual, last_sg.cg.converged,
                                    last_sg.cg.lambda_floored});
      }

      EpochMetrics m;
      m.epoch = epoch;
      m.env_steps = env_steps;
      for (const auto& tr : batch.trajs) {
        m.leader_return += leader_objective_return(tr, cfg.gamma);
        m.follower_return += follower_objective_return(tr, cfg.gamma);
      }
      m.leader_return /= batch.size();
      m.follower_return /= batch.size();
      m.kl = mean_follower_kl(batch, *follower, res.follower_params, batch.behavior_follower);
      m.clip_frac = cfg.clip_enabled
                        ? follower_clip_fraction(batch, *follower, res.follower_params, cfg.ppo_clip_eps)
                        : 0.0;
      m.cg_iters = last_sg.cg.iters_used;
      m.cg_converged = last_sg.cg.converged;
      m.alpha = last_sg.alpha;
      m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      res.metrics.push_back(m);
      if (on_epoch) on_epoch(m);
    } catch (const NumericsError& e) {
      throw NumericsError("epoch " + std::to_string(epoch) + " (seed " + std::to_string(cfg.seed) +
                          ", batch stream epoch/" + std::to_string(epoch) + "): " + e.what());
    }
  }
  return res;
}

// Mean leader return over the final tenth of the epochs (at least one).
inline double final_return(const TrainResult& res) {
  if (res.metrics.empty()) return std::numeric_limits<double>::quiet_NaN();
  const int n = static_cast<int>(res.metrics.size());
  const int k = std::max(1, n / 10);
  double s = 0.0;
  for (int i = n - k; i < n; ++i) s += res.metrics[i].leader_return;
  return s / k;
}

struct SweepRow {
  double lambda = 0.0;  // +inf encodes the vanilla arm
  std::uint64_t seed = 0;
  double final_return = 0.0;
};

// lambda = +inf switches the arm to vanilla mode; seeds are base_seed + i.
inline std::vector<SweepRow> lambda_sweep(const SmgSpec& env, const TrainConfig& base,
                                          const std::vector<double>& lambdas, int n_seeds) {
  require(n_seeds >= 1, "lambda_sweep: n_seeds must be positive");
  std::vector<SweepRow> rows;
  for (const double lam : lambdas) {
    for (int i = 0; i < n_seeds; ++i) {
      TrainConfig cfg = base;
      cfg.seed = base.seed + static_cast<std::uint64_t>(i);
      if (std::isinf(lam)) {
        cfg.mode = TrainMode::vanilla;
      } else {
        require(lam >= 0.0, "lambda_sweep: lambda must be nonnegative");
        cfg.fisher_lambda = lam;
      }
      const TrainResult res = train(env, cfg);
      rows.push_back({lam, cfg.seed, final_return(res)});
    }
  }
  return rows;
}

}  // namespace sgame
