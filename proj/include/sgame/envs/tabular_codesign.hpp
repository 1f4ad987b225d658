#pragma once

#include <array>
#include <memory>

#include "sgame/smg.hpp"

namespace sgame {

// Smallest nontrivial co-design game, sized for exact trajectory enumeration.
//
// Leader: 3 states, 2 actions, T = 2, deterministic transitions, fixed start
// state 0. The terminal leader state is the morphology (3 of them).
// Follower: per morphology 2 states, 2 actions, step cap 3, stochastic
// transitions and start distribution.
//
// Construction (fixed build seed 20240001, stream tags in order "leader_reward",
// "leader_next", "follower" per attempt): rewards uniform in [-1, 1]; each
// stochastic row is uniform on the 2-simplex, i.e. (u, 1-u) with u ~ U(0,1),
// redrawn until u is in (1e-3, 1-1e-3) so every state stays reachable; the
// deterministic leader successor table is drawn uniformly over states and the
// whole attempt is redrawn until all 3 terminal states are reachable from the
// start within the 4 possible leader action pairs. Attempt index salts the
// stream tags, so the accepted table set is a pure function of the build seed.
class TabularCoDesignSMG final : public SmgSpec {
 public:
  static constexpr int kLeaderStates = 3;
  static constexpr int kLeaderActions = 2;
  static constexpr int kLeaderT = 2;
  static constexpr int kMorphs = 3;
  static constexpr int kFolStates = 2;
  static constexpr int kFolActions = 2;
  static constexpr int kStartState = 0;
  static constexpr std::uint64_t kBuildSeed = 20240001;

  explicit TabularCoDesignSMG(int follower_cap = 3) : follower_cap_(follower_cap) {
    require(follower_cap >= 1, "TabularCoDesignSMG: follower cap must be positive");
    build();
  }

  std::string name() const override { return "tabular_codesign"; }
  int leader_horizon() const override { return kLeaderT; }
  int follower_step_cap() const override { return follower_cap_; }

  std::unique_ptr<PolicyFamily> make_leader_policy() const override {
    return std::make_unique<TabularSoftmaxPolicy>(1, kLeaderStates, kLeaderActions);
  }
  std::unique_ptr<PolicyFamily> make_follower_policy() const override {
    return std::make_unique<TabularSoftmaxPolicy>(kMorphs, kFolStates, kFolActions);
  }
  int leader_value_feature_dim() const override { return kLeaderStates; }
  int follower_value_feature_dim() const override { return kMorphs * kFolStates + kMorphs; }

  // Tables, exposed for the enumeration oracle.
  int leader_next(int s, int a) const { return leader_next_[s][a]; }
  double leader_reward(int s, int a) const { return leader_reward_[s][a]; }
  double follower_trans(int m, int s, int a, int s2) const { return fol_trans_[m][s][a][s2]; }
  double follower_reward(int m, int s, int a) const { return fol_reward_[m][s][a]; }
  double follower_init(int m, int s) const { return fol_init_[m][s]; }

  Obs make_leader_obs(int s) const {
    Obs o;
    o.id = s;
    o.features.assign(kLeaderStates, 0.0);
    o.features[s] = 1.0;
    return o;
  }
  // Joint (morphology, state) indicator plus the morphology one-hot, so a
  // linear value head can represent arbitrary per-(m,s) values.
  Obs make_follower_obs(int m, int s) const {
    Obs o;
    o.id = s;
    o.features.assign(kMorphs * kFolStates, 0.0);
    o.features[m * kFolStates + s] = 1.0;
    return o;
  }
  Conditioning make_morphology(int m) const {
    Conditioning c;
    c.id = m;
    c.features.assign(kMorphs, 0.0);
    c.features[m] = 1.0;
    return c;
  }

  std::unique_ptr<EpisodeSim> start_episode(RngStream& rng) const override;

 private:
  void build() {
    for (int attempt = 0;; ++attempt) {
      RngKey key(kBuildSeed);
      RngKey akey = key.child("attempt", static_cast<std::uint64_t>(attempt));
      RngStream rr = akey.stream("leader_reward");
      for (int s = 0; s < kLeaderStates; ++s)
        for (int a = 0; a < kLeaderActions; ++a) leader_reward_[s][a] = rr.uniform(-1.0, 1.0);
      RngStream rn = akey.stream("leader_next");
      for (int s = 0; s < kLeaderStates; ++s)
        for (int a = 0; a < kLeaderActions; ++a)
          leader_next_[s][a] = static_cast<int>(rn.next_u64() % kLeaderStates);
      RngStream rf = akey.stream("follower");
      for (int m = 0; m < kMorphs; ++m) {
        fol_init_[m][0] = simplex_draw(rf);
        fol_init_[m][1] = 1.0 - fol_init_[m][0];
        for (int s = 0; s < kFolStates; ++s)
          for (int a = 0; a < kFolActions; ++a) {
            fol_reward_[m][s][a] = rf.uniform(-1.0, 1.0);
            fol_trans_[m][s][a][0] = simplex_draw(rf);
            fol_trans_[m][s][a][1] = 1.0 - fol_trans_[m][s][a][0];
          }
      }
      if (all_morphs_reachable()) return;
    }
  }

  static double simplex_draw(RngStream& rng) {
    double u = rng.uniform();
    while (u <= 1e-3 || u >= 1.0 - 1e-3) u = rng.uniform();
    return u;
  }

  bool all_morphs_reachable() const {
    std::array<bool, kMorphs> seen{};
    for (int a0 = 0; a0 < kLeaderActions; ++a0)
      for (int a1 = 0; a1 < kLeaderActions; ++a1)
        seen[leader_next_[leader_next_[kStartState][a0]][a1]] = true;
    return seen[0] && seen[1] && seen[2];
  }

  int follower_cap_;
  double leader_reward_[kLeaderStates][kLeaderActions];
  int leader_next_[kLeaderStates][kLeaderActions];
  double fol_trans_[kMorphs][kFolStates][kFolActions][kFolStates];
  double fol_reward_[kMorphs][kFolStates][kFolActions];
  double fol_init_[kMorphs][kFolStates];
};

class TabularCoDesignSim final : public EpisodeSim {
 public:
  explicit TabularCoDesignSim(const TabularCoDesignSMG& env)
      : env_(env), leader_state_(TabularCoDesignSMG::kStartState) {}

  Obs leader_obs() const override { return env_.make_leader_obs(leader_state_); }

  double apply_leader_action(const Action& a, RngStream&) override {
    const double r = env_.leader_reward(leader_state_, a.id);
    leader_state_ = env_.leader_next(leader_state_, a.id);
    ++leader_t_;
    return r;
  }

  Conditioning morphology() const override {
    require(leader_t_ == TabularCoDesignSMG::kLeaderT, "morphology queried mid leader phase");
    return env_.make_morphology(leader_state_);
  }

  void begin_follower_phase(RngStream& rng) override {
    morph_ = leader_state_;
    std::vector<double> init(TabularCoDesignSMG::kFolStates);
    for (int s = 0; s < TabularCoDesignSMG::kFolStates; ++s) init[s] = env_.follower_init(morph_, s);
    fol_state_ = rng.categorical(init);
  }

  Obs follower_obs() const override { return env_.make_follower_obs(morph_, fol_state_); }

  StepResult apply_follower_action(const Action& a, RngStream& rng) override {
    StepResult r;
    r.reward = env_.follower_reward(morph_, fol_state_, a.id);
    std::vector<double> row(TabularCoDesignSMG::kFolStates);
    for (int s2 = 0; s2 < TabularCoDesignSMG::kFolStates; ++s2)
      row[s2] = env_.follower_trans(morph_, fol_state_, a.id, s2);
    fol_state_ = rng.categorical(row);
    ++fol_t_;
    // The horizon is part of the game: value past it is zero, so end the
    // episode rather than truncate it.
    r.done = fol_t_ >= env_.follower_step_cap();
    return r;
  }

 private:
  const TabularCoDesignSMG& env_;
  int leader_state_;
  int leader_t_ = 0;
  int morph_ = -1;
  int fol_state_ = -1;
  int fol_t_ = 0;
};

inline std::unique_ptr<EpisodeSim> TabularCoDesignSMG::start_episode(RngStream&) const {
  return std::make_unique<TabularCoDesignSim>(*this);
}

}  // namespace sgame
