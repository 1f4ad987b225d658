#pragma once

#include <memory>
#include <vector>

#include "sgame/smg.hpp"

namespace sgame {

// 1-D chain-of-segments co-design game.
//
// Leader phase (T steps): edit a chain of 1..4 segments with lengths in
// {0.5, 1.0, 1.5}. Actions: add a 0.5 segment, lengthen the last segment by
// 0.5, shorten it by 0.5, no-op; invalid edits are masked out. Adding costs
// add_cost in leader reward; all other edits are free. Start chain: [1.0].
//
// Follower phase (point mass on a line, up to H steps): mass m = total length,
// actuator gain g = 1/(1 + 0.3 * segment count). Per step with force a:
// x' = x + dt*v, then v' = v + dt*(g*a/m), reward (x'-x)/dt - effort_w*a^2.
struct ChainWalkerConfig {
  int leader_T = 5;
  int follower_H = 100;
  double dt = 0.05;
  double effort_w = 1e-4;
  double add_cost = 0.01;
  enum class LeaderKind { tabular, mlp } leader_kind = LeaderKind::tabular;
  int mlp_hidden = 16;
};

namespace chain {

constexpr int kMaxSegments = 4;
constexpr int kActions = 4;  // add, lengthen-last, shorten-last, no-op
constexpr int kAdd = 0, kLengthen = 1, kShorten = 2, kNoop = 3;

inline int digit(double len) { return static_cast<int>(len * 2.0 + 0.5) - 1; }  // 0.5/1.0/1.5 -> 0/1/2

// Mixed-radix id over all 3 + 9 + 27 + 81 = 120 possible chains.
inline int morph_id(const std::vector<double>& lens) {
  static const int offset[5] = {0, 0, 3, 12, 39};
  int id = offset[lens.size()];
  int mult = 1;
  for (double l : lens) {
    id += digit(l) * mult;
    mult *= 3;
  }
  return id;
}
constexpr int kMorphIds = 120;

inline double total_length(const std::vector<double>& lens) {
  double m = 0.0;
  for (double l : lens) m += l;
  return m;
}
inline double gain(const std::vector<double>& lens) {
  return 1.0 / (1.0 + 0.3 * static_cast<double>(lens.size()));
}

// [l1..l4 zero-padded, total length, gain]
inline std::vector<double> morph_features(const std::vector<double>& lens) {
  std::vector<double> f(kMaxSegments, 0.0);
  for (std::size_t i = 0; i < lens.size(); ++i) f[i] = lens[i];
  f.push_back(total_length(lens));
  f.push_back(gain(lens));
  return f;
}

inline std::vector<std::uint8_t> action_mask(const std::vector<double>& lens) {
  std::vector<std::uint8_t> m(kActions, 1);
  if (static_cast<int>(lens.size()) >= kMaxSegments) m[kAdd] = 0;
  if (lens.back() >= 1.5 - 1e-12) m[kLengthen] = 0;
  if (lens.back() <= 0.5 + 1e-12) m[kShorten] = 0;
  return m;
}

}  // namespace chain

class ChainWalkerEnv final : public SmgSpec {
 public:
  explicit ChainWalkerEnv(ChainWalkerConfig cfg = {}) : cfg_(cfg) {
    require(cfg.leader_T >= 1 && cfg.follower_H >= 1, "ChainWalkerEnv: bad horizons");
    require(cfg.dt > 0.0 && cfg.effort_w >= 0.0, "ChainWalkerEnv: bad constants");
  }

  std::string name() const override { return "chain_walker"; }
  int leader_horizon() const override { return cfg_.leader_T; }
  int follower_step_cap() const override { return cfg_.follower_H; }
  const ChainWalkerConfig& config() const { return cfg_; }

  std::unique_ptr<PolicyFamily> make_leader_policy() const override {
    if (cfg_.leader_kind == ChainWalkerConfig::LeaderKind::mlp)
      return std::make_unique<MlpSoftmaxPolicy>(6, cfg_.mlp_hidden, chain::kActions);
    return std::make_unique<TabularSoftmaxPolicy>(1, chain::kMorphIds, chain::kActions);
  }
  std::unique_ptr<PolicyFamily> make_follower_policy() const override {
    // input: [v] + 6 morphology features
    return std::make_unique<LinearGaussianPolicy>(7, 1, 0.0);
  }
  int leader_value_feature_dim() const override { return 6; }
  int follower_value_feature_dim() const override { return 7; }

  std::unique_ptr<EpisodeSim> start_episode(RngStream& rng) const override;

 private:
  ChainWalkerConfig cfg_;
};

class ChainWalkerSim final : public EpisodeSim {
 public:
  explicit ChainWalkerSim(const ChainWalkerConfig& cfg) : cfg_(cfg), lens_{1.0} {}

  Obs leader_obs() const override {
    Obs o;
    o.id = chain::morph_id(lens_);
    o.features = chain::morph_features(lens_);
    o.mask = chain::action_mask(lens_);
    return o;
  }

  double apply_leader_action(const Action& a, RngStream&) override {
    switch (a.id) {
      case chain::kAdd:
        require(static_cast<int>(lens_.size()) < chain::kMaxSegments, "add on full chain");
        lens_.push_back(0.5);
        return -cfg_.add_cost;
      case chain::kLengthen:
        require(lens_.back() < 1.5, "lengthen at max length");
        lens_.back() += 0.5;
        return 0.0;
      case chain::kShorten:
        require(lens_.back() > 0.5, "shorten at min length");
        lens_.back() -= 0.5;
        return 0.0;
      case chain::kNoop:
        return 0.0;
      default:
        throw EnvError("ChainWalker: unknown leader action");
    }
  }

  Conditioning morphology() const override {
    Conditioning c;
    c.id = chain::morph_id(lens_);
    c.features = chain::morph_features(lens_);
    return c;
  }

  void begin_follower_phase(RngStream&) override {
    mass_ = chain::total_length(lens_);
    gain_ = chain::gain(lens_);
    x_ = 0.0;
    v_ = 0.0;
  }

  Obs follower_obs() const override {
    Obs o;
    o.features = {v_};
    return o;
  }

  StepResult apply_follower_action(const Action& a, RngStream&) override {
    require(a.continuous.size() == 1, "ChainWalker: follower action must be 1-D");
    const double force = a.continuous[0];
    require_finite(force, "follower force");
    const double x_prev = x_;
    x_ += cfg_.dt * v_;
    v_ += cfg_.dt * (gain_ * force / mass_);
    StepResult r;
    r.reward = (x_ - x_prev) / cfg_.dt - cfg_.effort_w * force * force;
    r.done = false;  // runs to the step cap
    return r;
  }

 private:
  const ChainWalkerConfig& cfg_;
  std::vector<double> lens_;
  double mass_ = 0.0, gain_ = 0.0, x_ = 0.0, v_ = 0.0;
};

inline std::unique_ptr<EpisodeSim> ChainWalkerEnv::start_episode(RngStream&) const {
  return std::make_unique<ChainWalkerSim>(cfg_);
}

}  // namespace sgame
