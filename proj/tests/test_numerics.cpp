#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <tuple>

#include "sgame/adam.hpp"
#include "sgame/param_vector.hpp"

using namespace sgame;

TEST_CASE("ParamVector arithmetic") {
  ParamVector a{1.0, 2.0, 3.0};
  ParamVector b{0.5, -1.0, 2.0};
  ParamVector c = a + b;
  CHECK(c[0] == 1.5);
  CHECK(c[1] == 1.0);
  CHECK(c[2] == 5.0);
  c -= a;
  CHECK(c[1] == b[1]);
  c *= 2.0;
  CHECK(c[2] == 4.0);
  const ParamVector d = 3.0 * a;
  CHECK(d[0] == 3.0);
  CHECK(a.dim() == 3);
}

TEST_CASE("dot and norm") {
  ParamVector a{3.0, 4.0};
  CHECK(norm2(a) == 5.0);
  ParamVector b{1.0, -1.0};
  CHECK(dot(a, b) == -1.0);
  ParamVector wrong{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(dot(a, wrong), DimensionError);
  CHECK_THROWS_AS(a + wrong, DimensionError);
}

TEST_CASE("axpy accumulates in place") {
  ParamVector x{1.0, 2.0};
  ParamVector y{10.0, 20.0};
  axpy(0.5, x, y);
  CHECK(y[0] == 10.5);
  CHECK(y[1] == 21.0);
}

TEST_CASE("finiteness checks") {
  ParamVector a{1.0, 2.0};
  CHECK(a.all_finite());
  a[1] = std::nan("");
  CHECK_FALSE(a.all_finite());
  CHECK_THROWS_AS(a.check_finite("test"), NumericsError);
  CHECK_THROWS_AS(require_finite(std::numeric_limits<double>::infinity(), "x"), NumericsError);
}

TEST_CASE("Adam first step moves by lr against unit gradient") {
  // With bias correction the first step is exactly lr * sign(g) for any g.
  AdamState st = AdamState::init(2, 0.01);
  ParamVector p{1.0, -1.0};
  ParamVector g{3.0, -0.2};
  auto [st2, p2] = adam_step(st, p, g);
  CHECK_THAT(p2[0], Catch::Matchers::WithinAbs(1.0 + 0.01, 1e-9));
  CHECK_THAT(p2[1], Catch::Matchers::WithinAbs(-1.0 - 0.01, 1e-9));
  CHECK(st2.step_count == 1);
  CHECK(st.step_count == 0);  // input state untouched
}

TEST_CASE("Adam converges on a quadratic") {
  // Ascent on f(p) = -||p - t||^2 reaches t.
  const ParamVector target{0.3, -0.7, 1.1};
  AdamState st = AdamState::init(3, 0.05);
  ParamVector p(3);
  for (int i = 0; i < 2000; ++i) {
    ParamVector g = target;
    g -= p;
    g *= 2.0;
    std::tie(st, p) = adam_step(st, p, g);
  }
  ParamVector d = p;
  d -= target;
  CHECK(norm2(d) < 1e-4);
}

TEST_CASE("Adam rejects dimension mismatch and non-finite gradients") {
  AdamState st = AdamState::init(2, 0.01);
  ParamVector p{0.0, 0.0};
  ParamVector bad_dim{1.0};
  CHECK_THROWS_AS(adam_step(st, p, bad_dim), DimensionError);
  // list construction refuses non-finite entries outright
  CHECK_THROWS_AS((ParamVector{1.0, std::nan("")}), NumericsError);
  ParamVector bad_val{1.0, 2.0};
  bad_val[1] = std::nan("");  // element writes are unchecked, adam_step is not
  CHECK_THROWS_AS(adam_step(st, p, bad_val), NumericsError);
}

TEST_CASE("gradient clipping") {
  ParamVector g{3.0, 4.0};
  clip_grad_norm(g, 10.0);  // under the cap, unchanged
  CHECK(g[0] == 3.0);
  clip_grad_norm(g, 1.0);
  CHECK_THAT(norm2(g), Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(g[0] / g[1], Catch::Matchers::WithinAbs(0.75, 1e-12));  // direction kept
  ParamVector h{3.0, 4.0};
  clip_grad_norm(h, 0.0);  // disabled
  CHECK(h[0] == 3.0);
}
