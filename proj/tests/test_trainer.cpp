#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "sgame/trainer.hpp"

using namespace sgame;

namespace {

TrainConfig small_tabular_config() {
  TrainConfig cfg;
  cfg.gamma = 0.9;
  cfg.epochs = 2;
  cfg.batch_trajectories = 16;
  cfg.ppo_iters_per_batch = 2;
  cfg.value_epochs = 10;
  cfg.leader_lr = 1e-3;
  cfg.follower_lr = 1e-3;
  cfg.seed = 5;
  return cfg;
}

// An env whose follower rewards go non-finite, for error-context checks.
class FaultySim final : public EpisodeSim {
 public:
  explicit FaultySim(const TabularCoDesignSMG& env) : inner_(env) {}
  Obs leader_obs() const override { return inner_.leader_obs(); }
  double apply_leader_action(const Action& a, RngStream& rng) override {
    return inner_.apply_leader_action(a, rng);
  }
  Conditioning morphology() const override { return inner_.morphology(); }
  void begin_follower_phase(RngStream& rng) override { inner_.begin_follower_phase(rng); }
  Obs follower_obs() const override { return inner_.follower_obs(); }
  StepResult apply_follower_action(const Action& a, RngStream& rng) override {
    StepResult r = inner_.apply_follower_action(a, rng);
    r.reward = std::numeric_limits<double>::quiet_NaN();
    return r;
  }

 private:
  TabularCoDesignSim inner_;
};

class FaultyEnv final : public SmgSpec {
 public:
  std::string name() const override { return "faulty"; }
  int leader_horizon() const override { return base_.leader_horizon(); }
  int follower_step_cap() const override { return base_.follower_step_cap(); }
  std::unique_ptr<PolicyFamily> make_leader_policy() const override {
    return base_.make_leader_policy();
  }
  std::unique_ptr<PolicyFamily> make_follower_policy() const override {
    return base_.make_follower_policy();
  }
  int leader_value_feature_dim() const override { return base_.leader_value_feature_dim(); }
  int follower_value_feature_dim() const override { return base_.follower_value_feature_dim(); }
  std::unique_ptr<EpisodeSim> start_episode(RngStream&) const override {
    return std::make_unique<FaultySim>(base_);
  }

 private:
  TabularCoDesignSMG base_;
};

}  // namespace

TEST_CASE("zero epochs returns the initial parameters untouched") {
  TabularCoDesignSMG env;
  TrainConfig cfg = small_tabular_config();
  cfg.epochs = 0;
  const TrainResult res = train(env, cfg);
  CHECK(res.metrics.empty());
  RngKey key(cfg.seed);
  RngStream li = key.stream("init_leader"), fi = key.stream("init_follower");
  const ParamVector lp = env.make_leader_policy()->init_params(li);
  const ParamVector fp = env.make_follower_policy()->init_params(fi);
  ParamVector dl = res.leader_params;
  dl -= lp;
  ParamVector df = res.follower_params;
  df -= fp;
  CHECK(norm2(dl) == 0.0);
  CHECK(norm2(df) == 0.0);
}

TEST_CASE("training is bit-deterministic in the config") {
  TabularCoDesignSMG env;
  const TrainConfig cfg = small_tabular_config();
  const TrainResult a = train(env, cfg);
  const TrainResult b = train(env, cfg);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].leader_return == b.metrics[i].leader_return);
    CHECK(a.metrics[i].follower_return == b.metrics[i].follower_return);
    CHECK(a.metrics[i].kl == b.metrics[i].kl);
  }
  ParamVector d = a.leader_params;
  d -= b.leader_params;
  CHECK(norm2(d) == 0.0);
  TrainConfig other = cfg;
  other.seed = 6;
  const TrainResult c = train(env, other);
  ParamVector dc = a.leader_params;
  dc -= c.leader_params;
  CHECK(norm2(dc) > 0.0);
}

TEST_CASE("all trainer modes run and trace the leader updates") {
  TabularCoDesignSMG env;
  for (TrainMode mode : {TrainMode::stackelberg, TrainMode::vanilla, TrainMode::analytic_hessian}) {
    TrainConfig cfg = small_tabular_config();
    cfg.mode = mode;
    const TrainResult res = train(env, cfg);
    REQUIRE(res.metrics.size() == 2);
    REQUIRE(static_cast<int>(res.leader_trace.size()) == cfg.epochs * cfg.ppo_iters_per_batch);
    for (const auto& t : res.leader_trace) {
      // the response can never outweigh the direct term
      CHECK(t.alpha * t.norm_response <= t.norm_direct + 1e-12);
      CHECK(t.alpha <= 1.0);
      CHECK(t.alpha >= 0.0);
      if (mode == TrainMode::vanilla) {
        CHECK(t.norm_response == 0.0);
        CHECK(t.cg_iters == 0);
      }
    }
    for (const auto& m : res.metrics) {
      CHECK(std::isfinite(m.leader_return));
      CHECK(std::isfinite(m.follower_return));
      CHECK(m.env_steps > 0);
    }
  }
}

TEST_CASE("env step accounting accumulates leader and follower transitions") {
  TabularCoDesignSMG env;
  TrainConfig cfg = small_tabular_config();
  const TrainResult res = train(env, cfg);
  // tabular episodes are length 2 + 3 with 16 trajectories
  CHECK(res.metrics[0].env_steps == 16 * 5);
  CHECK(res.metrics[1].env_steps == 2 * 16 * 5);
}

TEST_CASE("zero damping is floored and flagged in the trace") {
  TabularCoDesignSMG env;
  TrainConfig cfg = small_tabular_config();
  cfg.fisher_lambda = 0.0;
  cfg.epochs = 1;
  const TrainResult res = train(env, cfg);
  REQUIRE_FALSE(res.leader_trace.empty());
  for (const auto& t : res.leader_trace) CHECK(t.lambda_floored);
}

TEST_CASE("numerics failures carry the epoch and seed context") {
  FaultyEnv env;
  TrainConfig cfg = small_tabular_config();
  cfg.epochs = 1;
  try {
    train(env, cfg);
    FAIL("expected NumericsError");
  } catch (const NumericsError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 0") != std::string::npos);
    CHECK(msg.find("seed 5") != std::string::npos);
  }
}

TEST_CASE("final return averages the last tenth of training") {
  TrainResult res;
  for (int i = 0; i < 30; ++i) {
    EpochMetrics m;
    m.epoch = i;
    m.leader_return = i < 27 ? 0.0 : 2.0;  // last 3 of 30
    res.metrics.push_back(m);
  }
  CHECK_THAT(final_return(res), Catch::Matchers::WithinAbs(2.0, 1e-12));
  TrainResult one;
  EpochMetrics m;
  m.leader_return = 7.0;
  one.metrics.push_back(m);
  CHECK(final_return(one) == 7.0);
}

TEST_CASE("lambda sweep covers the grid with consecutive seeds") {
  TabularCoDesignSMG env;
  TrainConfig cfg = small_tabular_config();
  cfg.epochs = 1;
  cfg.ppo_iters_per_batch = 1;
  const std::vector<double> lambdas{5.0, std::numeric_limits<double>::infinity()};
  const auto rows = lambda_sweep(env, cfg, lambdas, 2);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].lambda == 5.0);
  CHECK(rows[0].seed == 5);
  CHECK(rows[1].seed == 6);
  CHECK(std::isinf(rows[2].lambda));
  for (const auto& r : rows) CHECK(std::isfinite(r.final_return));
}

TEST_CASE("config validation rejects bad settings") {
  TrainConfig cfg;
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = TrainConfig{};
  cfg.ppo_clip_eps = 1.0;
  CHECK_THROWS_AS(cfg.validate(), DimensionError);
  cfg = TrainConfig{};
  cfg.clip_enabled = false;
  cfg.ppo_clip_eps = 1.0;  // ignored when clipping is off
  CHECK_NOTHROW(cfg.validate());
}
