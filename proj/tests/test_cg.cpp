#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sgame/cg.hpp"
#include "sgame/envs/tabular_codesign.hpp"

using namespace sgame;

namespace {

// random SPD matrix A = B^T B + 0.3 I
std::vector<double> random_spd(int d, std::uint64_t seed) {
  RngStream rs = RngKey(seed).stream("spd");
  std::vector<double> B(static_cast<std::size_t>(d) * d);
  for (auto& x : B) x = rs.normal();
  std::vector<double> A(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += B[k * d + i] * B[k * d + j];
      A[static_cast<std::size_t>(i) * d + j] = s + (i == j ? 0.3 : 0.0);
    }
  return A;
}

std::function<ParamVector(const ParamVector&)> matvec(const std::vector<double>& A, int d) {
  return [&A, d](const ParamVector& v) {
    ParamVector out(d);
    for (int i = 0; i < d; ++i) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += A[static_cast<std::size_t>(i) * d + j] * v[j];
      out[i] = s;
    }
    return out;
  };
}

ParamVector random_vec(int d, std::uint64_t seed) {
  RngStream rs = RngKey(seed).stream("b");
  ParamVector b(d);
  for (int i = 0; i < d; ++i) b[i] = rs.normal();
  return b;
}

}  // namespace

TEST_CASE("zero rhs converges immediately") {
  const CgReport rep =
      conjugate_gradient([](const ParamVector& v) { return v; }, ParamVector(5), {20, 1e-3, 0.0});
  CHECK(rep.converged);
  CHECK(rep.iters_used == 0);
  CHECK(norm2(rep.solution) == 0.0);
}

TEST_CASE("identity solves in one iteration") {
  const ParamVector b = random_vec(6, 1);
  const CgReport rep = conjugate_gradient([](const ParamVector& v) { return v; }, b, {20, 1e-6, 0.0});
  CHECK(rep.converged);
  CHECK(rep.iters_used == 1);
  ParamVector d = rep.solution;
  d -= b;
  CHECK(norm2(d) < 1e-12);
}

TEST_CASE("dense SPD systems solve to dimension-many iterations") {
  const int d = 9;
  const auto A = random_spd(d, 2);
  const ParamVector b = random_vec(d, 3);
  const CgReport rep = conjugate_gradient(matvec(A, d), b, {d, 1e-10, 0.0});
  CHECK(rep.converged);
  CHECK(rep.iters_used <= d);
  // recomputed residual agrees with the tracked one
  ParamVector r = matvec(A, d)(rep.solution);
  r -= b;
  CHECK_THAT(norm2(r) / norm2(b), Catch::Matchers::WithinAbs(rep.final_rel_residual, 1e-10));
  CHECK(norm2(r) / norm2(b) < 1e-9);
}

TEST_CASE("iteration cap reports non-convergence at a tight tolerance") {
  const int d = 30;
  const auto A = random_spd(d, 4);
  const ParamVector b = random_vec(d, 5);
  const CgReport rep = conjugate_gradient(matvec(A, d), b, {2, 1e-14, 0.0});
  CHECK_FALSE(rep.converged);
  CHECK(rep.iters_used == 2);
  CHECK(rep.final_rel_residual > 1e-14);
}

TEST_CASE("indefinite curvature stops without blowing up") {
  // A = diag(1, -1): the second search direction has negative curvature.
  const auto apply = [](const ParamVector& v) {
    ParamVector out = v;
    out[1] = -v[1];
    return out;
  };
  ParamVector b(2);
  b[0] = 1.0;
  b[1] = 1.0;
  const CgReport rep = conjugate_gradient(apply, b, {10, 1e-10, 0.0});
  CHECK_FALSE(rep.converged);
  CHECK(rep.solution.all_finite());
}

TEST_CASE("non-finite operators raise NumericsError") {
  const auto apply = [](const ParamVector& v) {
    ParamVector out = v;
    out[0] = std::nan("");
    return out;
  };
  CHECK_THROWS_AS(conjugate_gradient(apply, random_vec(3, 6), {5, 1e-6, 0.0}), NumericsError);
}

TEST_CASE("huge damping sends the response to rhs over lambda") {
  TabularCoDesignSMG env;
  const auto leader = env.make_leader_policy();
  const auto follower = env.make_follower_policy();
  RngStream ls = RngKey(7).stream("l"), fs = RngKey(7).stream("f");
  ParamVector lp(leader->param_dim()), fp(follower->param_dim());
  for (int i = 0; i < lp.dim(); ++i) lp[i] = ls.uniform(-0.5, 0.5);
  for (int i = 0; i < fp.dim(); ++i) fp[i] = fs.uniform(-0.5, 0.5);
  const RolloutBatch batch = collect_rollouts(env, *leader, lp, *follower, fp, 16, RngKey(8));
  const ParamVector rhs = random_vec(fp.dim(), 9);
  const CgReport rep = solve_response(batch, *follower, fp, rhs, {20, 1e-6, 1e12});
  REQUIRE(rep.converged);
  ParamVector want = rhs;
  want *= 1e-12;
  ParamVector d = rep.solution;
  d -= want;
  CHECK(norm2(d) / norm2(want) < 1e-9);
  CHECK_FALSE(rep.lambda_floored);
}

TEST_CASE("zero damping is floored and flagged") {
  TabularCoDesignSMG env;
  const auto leader = env.make_leader_policy();
  const auto follower = env.make_follower_policy();
  RngStream ls = RngKey(10).stream("l"), fs = RngKey(10).stream("f");
  ParamVector lp(leader->param_dim()), fp(follower->param_dim());
  for (int i = 0; i < lp.dim(); ++i) lp[i] = ls.uniform(-0.5, 0.5);
  for (int i = 0; i < fp.dim(); ++i) fp[i] = fs.uniform(-0.5, 0.5);
  const RolloutBatch batch = collect_rollouts(env, *leader, lp, *follower, fp, 8, RngKey(11));
  const CgReport rep = solve_response(batch, *follower, fp, random_vec(fp.dim(), 12), {20, 1e-3, 0.0});
  CHECK(rep.lambda_floored);
  CHECK(rep.solution.all_finite());
}
