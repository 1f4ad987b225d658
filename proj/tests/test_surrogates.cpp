#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sgame/envs/tabular_codesign.hpp"
#include "sgame/surrogates.hpp"

using namespace sgame;

namespace {

struct Fixture {
  TabularCoDesignSMG env;
  std::unique_ptr<PolicyFamily> leader = env.make_leader_policy();
  std::unique_ptr<PolicyFamily> follower = env.make_follower_policy();
  ParamVector lp, fp;
  RolloutBatch batch;

  explicit Fixture(std::uint64_t seed = 7, int n = 48) {
    RngStream ls = RngKey(seed).stream("l"), fs = RngKey(seed).stream("f");
    lp = ParamVector(leader->param_dim());
    for (int i = 0; i < lp.dim(); ++i) lp[i] = ls.uniform(-0.6, 0.6);
    fp = ParamVector(follower->param_dim());
    for (int i = 0; i < fp.dim(); ++i) fp[i] = fs.uniform(-0.6, 0.6);
    batch = collect_rollouts(env, *leader, lp, *follower, fp, n, RngKey(seed).child("roll"));
    compute_batch_advantages();
  }

  void compute_batch_advantages() {
    for (auto& tr : batch.trajs) {
      double g = 0.0;
      for (int k = static_cast<int>(tr.follower_steps.size()) - 1; k >= 0; --k) {
        g = tr.follower_steps[k].reward + 0.9 * g;
        tr.follower_steps[k].ret = g;
        tr.follower_steps[k].advantage = g - 0.5;  // arbitrary baseline shift
      }
      double gl = g;
      for (int t = static_cast<int>(tr.leader_steps.size()) - 1; t >= 0; --t) {
        gl = tr.leader_steps[t].reward + 0.9 * gl;
        tr.leader_steps[t].ret = gl;
        tr.leader_steps[t].advantage = gl - 0.2;
      }
    }
  }
};

double rel_diff(const ParamVector& a, const ParamVector& b) {
  ParamVector d = a;
  d -= b;
  return norm2(d) / std::max(norm2(b), 1e-12);
}

}  // namespace

TEST_CASE("min-gate zeroes the profitable side past the boundary") {
  const ClipConfig clip = ClipConfig::with_eps(0.2);
  // positive advantage: clipped at and beyond 1 + eps
  CHECK(detail::ppo_step_weight(1.2, 1.0, clip) == 0.0);
  CHECK(detail::ppo_step_weight(1.5, 1.0, clip) == 0.0);
  CHECK(detail::ppo_step_weight(1.19, 1.0, clip) == 1.19);
  // negative advantage: clipped at and below 1 - eps
  CHECK(detail::ppo_step_weight(0.8, -1.0, clip) == 0.0);
  CHECK(detail::ppo_step_weight(0.5, -1.0, clip) == 0.0);
  CHECK(detail::ppo_step_weight(0.81, -1.0, clip) == -0.81);
  // the unprofitable side stays live (min picks the unclipped branch)
  CHECK(detail::ppo_step_weight(1.5, -1.0, clip) == -1.5);
  CHECK(detail::ppo_step_weight(0.5, 1.0, clip) == 0.5);
  // clipping off
  const ClipConfig off = ClipConfig::none();
  CHECK(detail::ppo_step_weight(1.7, 2.0, off) == 3.4);
}

TEST_CASE("clamp gate zeroes both sides outside the window") {
  const ClipConfig clip = ClipConfig::with_eps(0.2);
  CHECK(detail::clamp_gate_weight(1.2, clip) == 0.0);
  CHECK(detail::clamp_gate_weight(0.8, clip) == 0.0);
  CHECK(detail::clamp_gate_weight(1.1, clip) == 1.1);
  CHECK(detail::clamp_gate_weight(0.9, clip) == 0.9);
  CHECK(detail::clamp_gate_weight(5.0, ClipConfig::none()) == 5.0);
}

TEST_CASE("clip config validation") {
  CHECK_THROWS_AS(ClipConfig::with_eps(0.0).validate(), DimensionError);
  CHECK_THROWS_AS(ClipConfig::with_eps(1.0).validate(), DimensionError);
  CHECK_NOTHROW(ClipConfig::with_eps(0.2).validate());
  CHECK_NOTHROW(ClipConfig::none().validate());
}

TEST_CASE("at the behavior snapshot clipping is inert") {
  Fixture fx;
  const ClipConfig on = ClipConfig::with_eps(0.2);
  const ClipConfig off = ClipConfig::none();
  CHECK(rel_diff(leader_direct_grad(fx.batch, *fx.leader, fx.lp, on),
                 leader_direct_grad(fx.batch, *fx.leader, fx.lp, off)) < 1e-12);
  CHECK(rel_diff(follower_ppo_grad(fx.batch, *fx.follower, fx.fp, on),
                 follower_ppo_grad(fx.batch, *fx.follower, fx.fp, off)) < 1e-12);
  CHECK(rel_diff(leader_grad_wrt_follower(fx.batch, *fx.follower, fx.fp, on, 0.9),
                 leader_grad_wrt_follower(fx.batch, *fx.follower, fx.fp, off, 0.9)) < 1e-12);
}

TEST_CASE("snapshot gradients reduce to score times advantage") {
  Fixture fx;
  const ParamVector got = leader_direct_grad(fx.batch, *fx.leader, fx.lp, ClipConfig::with_eps(0.2));
  ParamVector want(fx.lp.dim());
  for (int i = 0; i < fx.batch.size(); ++i)
    for (const auto& s : fx.batch.trajs[i].leader_steps)
      axpy(fx.batch.weight(i) * s.advantage, fx.leader->score(fx.lp, s.obs, Conditioning{}, s.action),
           want);
  CHECK(rel_diff(got, want) < 1e-12);
}

TEST_CASE("the cross surrogate's follower factor carries the phase discount") {
  Fixture fx;
  const double gamma = 0.9;
  const auto ts = TrajectoryScores::build(fx.batch, *fx.leader, fx.lp, *fx.follower, fx.fp,
                                          ClipConfig::with_eps(0.2), gamma);
  REQUIRE(static_cast<int>(ts.h_follower.size()) == fx.batch.size());
  const auto& tr = fx.batch.trajs[0];
  ParamVector want(fx.fp.dim());
  const double g2 = gamma * gamma;  // two leader steps
  for (const auto& s : tr.follower_steps)
    axpy(g2 * s.advantage, fx.follower->score(fx.fp, s.obs, tr.morphology, s.action), want);
  CHECK(rel_diff(ts.h_follower[0], want) < 1e-12);
}

TEST_CASE("cross JVP is linear in the direction") {
  Fixture fx;
  const auto ts = TrajectoryScores::build(fx.batch, *fx.leader, fx.lp, *fx.follower, fx.fp,
                                          ClipConfig::with_eps(0.2), 0.9);
  RngStream vs = RngKey(91).stream("v");
  ParamVector v1(fx.fp.dim()), v2(fx.fp.dim());
  for (int i = 0; i < fx.fp.dim(); ++i) {
    v1[i] = vs.normal();
    v2[i] = vs.normal();
  }
  ParamVector combo = 2.0 * v1;
  axpy(-3.0, v2, combo);
  const ParamVector lhs = cross_jvp(fx.batch, ts, combo);
  ParamVector rhs = 2.0 * cross_jvp(fx.batch, ts, v1);
  axpy(-3.0, cross_jvp(fx.batch, ts, v2), rhs);
  CHECK(rel_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("fisher product is symmetric, positive, linear, and damped") {
  Fixture fx;
  RngStream vs = RngKey(92).stream("v");
  ParamVector u(fx.fp.dim()), v(fx.fp.dim());
  for (int i = 0; i < fx.fp.dim(); ++i) {
    u[i] = vs.normal();
    v[i] = vs.normal();
  }
  const FisherOperator F(fx.batch, *fx.follower, fx.fp, 0.0);
  CHECK_THAT(dot(u, F.apply(v)), Catch::Matchers::WithinRel(dot(v, F.apply(u)), 1e-10));
  CHECK(dot(v, F.apply(v)) >= 0.0);
  ParamVector combo = 0.5 * u;
  axpy(2.0, v, combo);
  ParamVector rhs = 0.5 * F.apply(u);
  axpy(2.0, F.apply(v), rhs);
  CHECK(rel_diff(F.apply(combo), rhs) < 1e-12);
  // lambda adds a pure multiple of v
  ParamVector damped = fisher_vp(fx.batch, *fx.follower, fx.fp, v, 3.5);
  ParamVector expect = F.apply(v);
  axpy(3.5, v, expect);
  CHECK(rel_diff(damped, expect) < 1e-12);
}

TEST_CASE("analytic hessian product needs family support") {
  MlpSoftmaxPolicy mlp(2, 4, 3);
  ParamVector p(mlp.param_dim());
  ParamVector v(mlp.param_dim());
  RolloutBatch empty;
  CHECK_THROWS_AS(analytic_hessian_vp(empty, mlp, p, v), UnsupportedError);
}

TEST_CASE("analytic hessian operator negates and damps") {
  Fixture fx;
  RngStream vs = RngKey(93).stream("v");
  ParamVector v(fx.fp.dim());
  for (int i = 0; i < fx.fp.dim(); ++i) v[i] = vs.normal();
  const AnalyticHessianOperator op(fx.batch, *fx.follower, fx.fp, 2.0);
  ParamVector want = analytic_hessian_vp(fx.batch, *fx.follower, fx.fp, v);
  want *= -1.0;
  axpy(2.0, v, want);
  CHECK(rel_diff(op.apply(v), want) < 1e-12);
}

TEST_CASE("kl and clip fraction diagnostics") {
  Fixture fx;
  CHECK(mean_follower_kl(fx.batch, *fx.follower, fx.fp, fx.fp) == 0.0);
  CHECK(follower_clip_fraction(fx.batch, *fx.follower, fx.fp, 0.2) == 0.0);
  ParamVector moved = fx.fp;
  for (int i = 0; i < moved.dim(); ++i) moved[i] += (i % 2 ? 1.0 : -1.0);
  CHECK(mean_follower_kl(fx.batch, *fx.follower, moved, fx.fp) > 0.01);
  CHECK(follower_clip_fraction(fx.batch, *fx.follower, moved, 0.2) > 0.5);
}

TEST_CASE("estimators reject empty follower phases where required") {
  RolloutBatch empty;
  TabularCoDesignSMG env;
  const auto follower = env.make_follower_policy();
  ParamVector fp(follower->param_dim());
  ParamVector v(fp.dim());
  CHECK_THROWS_AS(FisherOperator(empty, *follower, fp, 1.0), DimensionError);
}
