#include <catch2/catch_amalgamated.hpp>

#include "sgame/cli.hpp"
#include "sgame/verify.hpp"

using namespace sgame;

TEST_CASE("every fast check passes") {
  const auto checks = fast_checks();
  REQUIRE(checks.size() >= 10);
  for (const auto& c : checks) {
    INFO(c.name << ": observed " << c.observed << " tol " << c.tol);
    CHECK(c.pass);
  }
}

TEST_CASE("a sign flip in the cross estimator is caught") {
  // Mutation probe: the cross-derivative comparison must be sharp enough to
  // reject the negated estimator, and the full runner must report failure.
  VerifyOptions opt;
  opt.cross_jvp_sign = -1.0;
  verifydetail::TabularFixture fx;
  const CheckResult flipped = cross_jvp_check(fx, opt);
  CHECK_FALSE(flipped.pass);
  CHECK(cmd_verify("fast", opt) == kExitFailure);
}
