#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sgame/policy.hpp"

namespace sgame {

struct StepRecord {
  Obs obs;
  Action action;
  double reward = 0.0;
  double behavior_logp = 0.0;
  // Filled by the advantage pass after collection.
  double advantage = 0.0;
  double ret = 0.0;  // discounted to-go from this step, value target
};

// One two-phase episode: exactly T leader edit steps, a frozen terminal
// morphology, then at most H follower control steps conditioned on it.
struct Trajectory {
  std::vector<StepRecord> leader_steps;
  Conditioning morphology;
  std::vector<StepRecord> follower_steps;
  bool truncated = false;   // follower phase cut at the step cap, not env-terminal
  Obs follower_final_obs;   // state after the last follower step; bootstrap input when truncated
};

// Trajectories plus the frozen behavior parameters that generated them.
// `weights` is a per-trajectory measure for expectation-style batches built by
// the enumeration oracle; empty means uniform 1/N.
struct RolloutBatch {
  std::vector<Trajectory> trajs;
  ParamVector behavior_leader;
  ParamVector behavior_follower;
  std::vector<double> weights;

  int size() const { return static_cast<int>(trajs.size()); }
  double weight(int i) const {
    return weights.empty() ? 1.0 / static_cast<double>(trajs.size()) : weights[i];
  }
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
};

// Stateful single-episode simulator handed out by an SmgSpec. The rollout
// driver calls: leader_obs/apply_leader_action T times, then morphology(),
// begin_follower_phase, then follower_obs/apply_follower_action until done or
// the step cap.
class EpisodeSim {
 public:
  virtual ~EpisodeSim() = default;
  virtual Obs leader_obs() const = 0;
  virtual double apply_leader_action(const Action& a, RngStream& rng) = 0;
  virtual Conditioning morphology() const = 0;
  virtual void begin_follower_phase(RngStream& rng) = 0;
  virtual Obs follower_obs() const = 0;
  virtual StepResult apply_follower_action(const Action& a, RngStream& rng) = 0;
};

class SmgSpec {
 public:
  virtual ~SmgSpec() = default;
  virtual std::string name() const = 0;
  virtual int leader_horizon() const = 0;     // T
  virtual int follower_step_cap() const = 0;  // H
  virtual std::unique_ptr<EpisodeSim> start_episode(RngStream& rng) const = 0;
  virtual std::unique_ptr<PolicyFamily> make_leader_policy() const = 0;
  virtual std::unique_ptr<PolicyFamily> make_follower_policy() const = 0;
  virtual int leader_value_feature_dim() const = 0;
  virtual int follower_value_feature_dim() const = 0;  // obs + conditioning features
};

inline Trajectory collect_trajectory(const SmgSpec& env, const PolicyFamily& leader,
                                     const ParamVector& leader_params,
                                     const PolicyFamily& follower,
                                     const ParamVector& follower_params, RngStream rng) {
  Trajectory tr;
  auto sim = env.start_episode(rng);
  const int T = env.leader_horizon();
  tr.leader_steps.reserve(T);
  for (int t = 0; t < T; ++t) {
    StepRecord s;
    s.obs = sim->leader_obs();
    double lp = 0.0;
    s.action = leader.sample(leader_params, s.obs, Conditioning{}, rng, &lp);
    s.behavior_logp = lp;
    s.reward = sim->apply_leader_action(s.action, rng);
    require_finite(s.reward, "leader reward");
    tr.leader_steps.push_back(std::move(s));
  }
  tr.morphology = sim->morphology();
  sim->begin_follower_phase(rng);
  const int H = env.follower_step_cap();
  tr.truncated = true;
  for (int t = 0; t < H; ++t) {
    StepRecord s;
    s.obs = sim->follower_obs();
    double lp = 0.0;
    s.action = follower.sample(follower_params, s.obs, tr.morphology, rng, &lp);
    s.behavior_logp = lp;
    const StepResult r = sim->apply_follower_action(s.action, rng);
    s.reward = r.reward;
    require_finite(s.reward, "follower reward");
    tr.follower_steps.push_back(std::move(s));
    if (r.done) {
      tr.truncated = false;
      break;
    }
  }
  if (tr.truncated) tr.follower_final_obs = sim->follower_obs();
  return tr;
}

// Per-trajectory streams are derived from (key, "traj", i): batch contents do
// not depend on collection order.
inline RolloutBatch collect_rollouts(const SmgSpec& env, const PolicyFamily& leader,
                                     const ParamVector& leader_params,
                                     const PolicyFamily& follower,
                                     const ParamVector& follower_params, int n_traj,
                                     const RngKey& key) {
  require(n_traj >= 1, "collect_rollouts: n_traj must be positive");
  RolloutBatch batch;
  batch.behavior_leader = leader_params;
  batch.behavior_follower = follower_params;
  batch.trajs.reserve(n_traj);
  for (int i = 0; i < n_traj; ++i) {
    batch.trajs.push_back(collect_trajectory(env, leader, leader_params, follower,
                                             follower_params,
                                             key.stream("traj", static_cast<std::uint64_t>(i))));
  }
  return batch;
}

// Leader objective: own rewards discounted from t=0 plus the follower tail
// re-discounted and shifted by the phase boundary, gamma^T * sum gamma^k R^F.
inline double leader_objective_return(const Trajectory& tr, double gamma) {
  double r = 0.0;
  double g = 1.0;
  for (const auto& s : tr.leader_steps) {
    r += g * s.reward;
    g *= gamma;
  }
  double f = 0.0;
  double gf = g;  // gamma^T
  for (const auto& s : tr.follower_steps) {
    f += gf * s.reward;
    gf *= gamma;
  }
  return r + f;
}

// Follower objective: discounting restarts at the phase boundary.
inline double follower_objective_return(const Trajectory& tr, double gamma) {
  double r = 0.0;
  double g = 1.0;
  for (const auto& s : tr.follower_steps) {
    r += g * s.reward;
    g *= gamma;
  }
  return r;
}

}  // namespace sgame
