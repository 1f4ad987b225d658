#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sgame/adam.hpp"
#include "sgame/smg.hpp"

namespace sgame {

struct AdvantageConfig {
  double gamma = 0.995;
  double gae_lambda = 0.95;
};

// Scalar value head, linear or one-hidden-layer tanh, tagged by phase.
// Follower inputs are [state features; morphology features].
class ValueFunction {
 public:
  enum class Family { linear, mlp };

  static ValueFunction linear(int in_dim, std::string phase) {
    ValueFunction v;
    v.family_ = Family::linear;
    v.in_dim_ = in_dim;
    v.phase_ = std::move(phase);
    v.params_ = ParamVector::zeros(in_dim + 1);  // [w, b]
    return v;
  }

  static ValueFunction mlp(int in_dim, int hidden, std::string phase, RngStream& rng) {
    ValueFunction v;
    v.family_ = Family::mlp;
    v.in_dim_ = in_dim;
    v.hidden_ = hidden;
    v.phase_ = std::move(phase);
    v.params_ = ParamVector::zeros(hidden * in_dim + hidden + hidden + 1);
    const double a = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (int i = 0; i < hidden * in_dim; ++i) v.params_[i] = rng.uniform(-a, a);
    const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (int j = 0; j < hidden; ++j) v.params_[hidden * in_dim + hidden + j] = rng.uniform(-a2, a2);
    return v;
  }

  const std::string& phase() const { return phase_; }
  int in_dim() const { return in_dim_; }
  const ParamVector& params() const { return params_; }
  ParamVector& params() { return params_; }

  double predict(const std::vector<double>& f) const {
    require(static_cast<int>(f.size()) == in_dim_, "ValueFunction: feature dim mismatch");
    if (family_ == Family::linear) {
      double y = params_[in_dim_];
      for (int i = 0; i < in_dim_; ++i) y += params_[i] * f[i];
      return y;
    }
    double y = params_[params_.dim() - 1];
    for (int j = 0; j < hidden_; ++j) {
      double pre = params_[hidden_ * in_dim_ + j];
      for (int i = 0; i < in_dim_; ++i) pre += params_[j * in_dim_ + i] * f[i];
      y += params_[hidden_ * in_dim_ + hidden_ + j] * std::tanh(pre);
    }
    return y;
  }

  // d predict / d params
  ParamVector grad(const std::vector<double>& f) const {
    ParamVector g(params_.dim());
    if (family_ == Family::linear) {
      for (int i = 0; i < in_dim_; ++i) g[i] = f[i];
      g[in_dim_] = 1.0;
      return g;
    }
    const int w2_off = hidden_ * in_dim_ + hidden_;
    for (int j = 0; j < hidden_; ++j) {
      double pre = params_[hidden_ * in_dim_ + j];
      for (int i = 0; i < in_dim_; ++i) pre += params_[j * in_dim_ + i] * f[i];
      const double t = std::tanh(pre);
      g[w2_off + j] = t;
      const double dpre = params_[w2_off + j] * (1.0 - t * t);
      for (int i = 0; i < in_dim_; ++i) g[j * in_dim_ + i] = dpre * f[i];
      g[hidden_ * in_dim_ + j] = dpre;
    }
    g[params_.dim() - 1] = 1.0;
    return g;
  }

 private:
  Family family_ = Family::linear;
  int in_dim_ = 0;
  int hidden_ = 0;
  std::string phase_;
  ParamVector params_;
};

inline std::vector<double> follower_value_input(const StepRecord& s, const Conditioning& c) {
  std::vector<double> f = s.obs.features;
  f.insert(f.end(), c.features.begin(), c.features.end());
  return f;
}

// Discounted to-go per step. Follower tails: zero beyond the last recorded
// step (no bootstrap at the horizon). Leader to-go includes the realized
// follower return through the phase boundary.
inline void compute_returns(RolloutBatch& batch, double gamma) {
  for (auto& tr : batch.trajs) {
    double g = 0.0;
    for (int k = static_cast<int>(tr.follower_steps.size()) - 1; k >= 0; --k) {
      g = tr.follower_steps[k].reward + gamma * g;
      tr.follower_steps[k].ret = g;
    }
    double gl = g;  // realized follower return, the leader's terminal payoff
    for (int t = static_cast<int>(tr.leader_steps.size()) - 1; t >= 0; --t) {
      gl = tr.leader_steps[t].reward + gamma * gl;
      tr.leader_steps[t].ret = gl;
    }
  }
}

// GAE over follower steps; the boundary bootstrap is V(s_H) when the episode
// was truncated at the cap and 0 when the env terminated.
inline void compute_follower_advantages(RolloutBatch& batch, const ValueFunction& vf,
                                        const AdvantageConfig& cfg) {
  for (auto& tr : batch.trajs) {
    const int n = static_cast<int>(tr.follower_steps.size());
    if (n == 0) continue;
    std::vector<double> v(n + 1, 0.0);
    for (int k = 0; k < n; ++k)
      v[k] = vf.predict(follower_value_input(tr.follower_steps[k], tr.morphology));
    if (tr.truncated) {
      StepRecord final_step;
      final_step.obs = tr.follower_final_obs;
      v[n] = vf.predict(follower_value_input(final_step, tr.morphology));
    }
    double adv = 0.0;
    for (int k = n - 1; k >= 0; --k) {
      const double delta = tr.follower_steps[k].reward + cfg.gamma * v[k + 1] - v[k];
      adv = delta + cfg.gamma * cfg.gae_lambda * adv;
      tr.follower_steps[k].advantage = adv;
    }
  }
}

// Leader-phase GAE: rewards R^L for t < T, terminal value at the boundary
// fixed to the realized discounted follower return (Monte Carlo bootstrap).
inline void compute_leader_advantages(RolloutBatch& batch, const ValueFunction& vf,
                                      const AdvantageConfig& cfg) {
  for (auto& tr : batch.trajs) {
    const int T = static_cast<int>(tr.leader_steps.size());
    if (T == 0) continue;
    std::vector<double> v(T + 1, 0.0);
    for (int t = 0; t < T; ++t) v[t] = vf.predict(tr.leader_steps[t].obs.features);
    v[T] = follower_objective_return(tr, cfg.gamma);
    double adv = 0.0;
    for (int t = T - 1; t >= 0; --t) {
      const double delta = tr.leader_steps[t].reward + cfg.gamma * v[t + 1] - v[t];
      adv = delta + cfg.gamma * cfg.gae_lambda * adv;
      tr.leader_steps[t].advantage = adv;
    }
  }
}

enum class Phase { leader, follower };

// In-place per-batch whitening of one phase's advantages.
inline void normalize_advantages(RolloutBatch& batch, Phase phase, double eps = 1e-8) {
  double sum = 0.0, sq = 0.0;
  long n = 0;
  auto visit = [&](auto&& fn) {
    for (auto& tr : batch.trajs) {
      auto& steps = phase == Phase::leader ? tr.leader_steps : tr.follower_steps;
      for (auto& s : steps) fn(s);
    }
  };
  visit([&](StepRecord& s) {
    sum += s.advantage;
    sq += s.advantage * s.advantage;
    ++n;
  });
  if (n == 0) return;
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sq / static_cast<double>(n) - mean * mean);
  const double denom = std::sqrt(var) + eps;
  visit([&](StepRecord& s) { s.advantage = (s.advantage - mean) / denom; });
}

// Full-batch MSE regression of the phase's value head onto the stored to-go
// returns. Returns the per-epoch loss trace.
inline std::vector<double> fit_value(ValueFunction& vf, const RolloutBatch& batch, Phase phase,
                                     AdamState& opt, int epochs) {
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (const auto& tr : batch.trajs) {
    const auto& steps = phase == Phase::leader ? tr.leader_steps : tr.follower_steps;
    for (const auto& s : steps) {
      xs.push_back(phase == Phase::leader ? s.obs.features : follower_value_input(s, tr.morphology));
      ys.push_back(s.ret);
    }
  }
  std::vector<double> trace;
  if (xs.empty()) return trace;
  const double n = static_cast<double>(xs.size());
  for (int e = 0; e < epochs; ++e) {
    ParamVector g(vf.params().dim());
    double loss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double err = vf.predict(xs[i]) - ys[i];
      loss += err * err;
      axpy(2.0 * err / n, vf.grad(xs[i]), g);
    }
    trace.push_back(loss / n);
    g *= -1.0;  // descend
    auto [next_opt, next_params] = adam_step(opt, vf.params(), g);
    opt = std::move(next_opt);
    vf.params() = std::move(next_params);
  }
  return trace;
}

}  // namespace sgame
