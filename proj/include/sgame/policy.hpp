#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "sgame/param_vector.hpp"
#include "sgame/rng.hpp"

namespace sgame {

// Observation handed to policies and value functions. Discrete families read
// `id`, function-approximation families read `features`. `mask` flags valid
// discrete actions; empty means all valid.
struct Obs {
  int id = -1;
  std::vector<double> features;
  std::vector<std::uint8_t> mask;
};

// Terminal morphology as the follower phase sees it, frozen for the episode.
struct Conditioning {
  int id = -1;
  std::vector<double> features;
};

struct Action {
  int id = -1;
  std::vector<double> continuous;
};

// A policy family is a pure map from (params, state, conditioning) to a
// distribution over actions. All derivatives are with respect to params.
class PolicyFamily {
 public:
  virtual ~PolicyFamily() = default;

  virtual int param_dim() const = 0;
  virtual bool supports_logp_hvp() const = 0;
  virtual ParamVector init_params(RngStream& rng) const = 0;

  virtual Action sample(const ParamVector& params, const Obs& obs, const Conditioning& cond,
                        RngStream& rng, double* logp_out) const = 0;
  virtual double logp(const ParamVector& params, const Obs& obs, const Conditioning& cond,
                      const Action& a) const = 0;
  virtual ParamVector score(const ParamVector& params, const Obs& obs, const Conditioning& cond,
                            const Action& a) const = 0;
  // Hessian of logp at params, applied to v.
  virtual ParamVector logp_hvp(const ParamVector& params, const Obs& obs, const Conditioning& cond,
                               const Action& a, const ParamVector& v) const {
    (void)params; (void)obs; (void)cond; (void)a; (void)v;
    throw UnsupportedError("logp_hvp not supported by this policy family");
  }
  // KL(pi_new || pi_old) at this state.
  virtual double kl(const ParamVector& new_params, const ParamVector& old_params, const Obs& obs,
                    const Conditioning& cond) const = 0;
};

// ---------------------------------------------------------------- tabular --

// Softmax over a logit table. One row per (conditioning, state); conditioning
// is ignored when n_conds == 1 (leader use). Masked actions get -inf logits.
class TabularSoftmaxPolicy final : public PolicyFamily {
 public:
  TabularSoftmaxPolicy(int n_conds, int n_states, int n_actions)
      : n_conds_(n_conds), n_states_(n_states), n_actions_(n_actions) {
    require(n_conds >= 1 && n_states >= 1 && n_actions >= 2, "TabularSoftmaxPolicy: bad shape");
  }

  int param_dim() const override { return n_conds_ * n_states_ * n_actions_; }
  bool supports_logp_hvp() const override { return true; }
  ParamVector init_params(RngStream&) const override { return ParamVector::zeros(param_dim()); }

  int row_offset(const Obs& obs, const Conditioning& cond) const {
    const int c = n_conds_ > 1 ? cond.id : 0;
    require(c >= 0 && c < n_conds_, "TabularSoftmaxPolicy: conditioning id out of range");
    require(obs.id >= 0 && obs.id < n_states_, "TabularSoftmaxPolicy: state id out of range");
    return (c * n_states_ + obs.id) * n_actions_;
  }

  std::vector<double> probs(const ParamVector& params, const Obs& obs,
                            const Conditioning& cond) const {
    require(params.dim() == param_dim(), "TabularSoftmaxPolicy: param dim mismatch");
    const int off = row_offset(obs, cond);
    std::vector<double> p(n_actions_, 0.0);
    double mx = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_actions_; ++a)
      if (valid(obs, a)) mx = std::max(mx, params[off + a]);
    if (!std::isfinite(mx)) throw EnvError("TabularSoftmaxPolicy: no valid action");
    double z = 0.0;
    for (int a = 0; a < n_actions_; ++a) {
      if (!valid(obs, a)) continue;
      p[a] = std::exp(params[off + a] - mx);
      z += p[a];
    }
    for (double& x : p) x /= z;
    return p;
  }

  Action sample(const ParamVector& params, const Obs& obs, const Conditioning& cond,
                RngStream& rng, double* logp_out) const override {
    const auto p = probs(params, obs, cond);
    Action a;
    a.id = rng.categorical(p);
    if (logp_out) *logp_out = std::log(p[a.id]);
    return a;
  }

  double logp(const ParamVector& params, const Obs& obs, const Conditioning& cond,
              const Action& a) const override {
    check_action(obs, a);
    return std::log(probs(params, obs, cond)[a.id]);
  }

  ParamVector score(const ParamVector& params, const Obs& obs, const Conditioning& cond,
                    const Action& a) const override {
    check_action(obs, a);
    const auto p = probs(params, obs, cond);
    const int off = row_offset(obs, cond);
    ParamVector g(param_dim());
    for (int k = 0; k < n_actions_; ++k)
      if (valid(obs, k)) g[off + k] = (k == a.id ? 1.0 : 0.0) - p[k];
    return g;
  }

  // Row Hessian is -(diag(p) - p p^T) independent of the taken action.
  ParamVector logp_hvp(const ParamVector& params, const Obs& obs, const Conditioning& cond,
                       const Action& a, const ParamVector& v) const override {
    check_action(obs, a);
    require(v.dim() == param_dim(), "logp_hvp: v dim mismatch");
    const auto p = probs(params, obs, cond);
    const int off = row_offset(obs, cond);
    double pv = 0.0;
    for (int k = 0; k < n_actions_; ++k) pv += p[k] * v[off + k];
    ParamVector h(param_dim());
    for (int k = 0; k < n_actions_; ++k)
      if (valid(obs, k)) h[off + k] = -p[k] * (v[off + k] - pv);
    return h;
  }

  double kl(const ParamVector& new_params, const ParamVector& old_params, const Obs& obs,
            const Conditioning& cond) const override {
    const auto pn = probs(new_params, obs, cond);
    const auto po = probs(old_params, obs, cond);
    double d = 0.0;
    for (int k = 0; k < n_actions_; ++k)
      if (valid(obs, k) && pn[k] > 0.0) d += pn[k] * (std::log(pn[k]) - std::log(po[k]));
    return d;
  }

 private:
  bool valid(const Obs& obs, int a) const {
    return obs.mask.empty() || obs.mask[static_cast<std::size_t>(a)] != 0;
  }
  void check_action(const Obs& obs, const Action& a) const {
    require(a.id >= 0 && a.id < n_actions_, "TabularSoftmaxPolicy: action id out of range");
    if (!valid(obs, a.id)) throw EnvError("TabularSoftmaxPolicy: logp of masked action");
  }

  int n_conds_, n_states_, n_actions_;
};

// ---------------------------------------------------- linear Gaussian -------

// Diagonal Gaussian with mean = W z + b over z = [state features; conditioning
// features] and a state-independent log-std vector. Layout: W row-major, b,
// log_std.
class LinearGaussianPolicy final : public PolicyFamily {
 public:
  LinearGaussianPolicy(int in_dim, int act_dim, double init_log_std = 0.0)
      : in_dim_(in_dim), act_dim_(act_dim), init_log_std_(init_log_std) {
    require(in_dim >= 1 && act_dim >= 1, "LinearGaussianPolicy: bad shape");
  }

  int param_dim() const override { return act_dim_ * in_dim_ + 2 * act_dim_; }
  bool supports_logp_hvp() const override { return true; }

  ParamVector init_params(RngStream&) const override {
    ParamVector p(param_dim());
    for (int j = 0; j < act_dim_; ++j) p[logstd_off() + j] = init_log_std_;
    return p;
  }

  Action sample(const ParamVector& params, const Obs& obs, const Conditioning& cond,
                RngStream& rng, double* logp_out) const override {
    const auto z = input(obs, cond);
    Action a;
    a.continuous.resize(act_dim_);
    for (int j = 0; j < act_dim_; ++j) {
      const double mu = mean_j(params, z, j);
      const double sd = std::exp(params[logstd_off() + j]);
      a.continuous[j] = mu + sd * rng.normal();
    }
    if (logp_out) *logp_out = logp(params, obs, cond, a);
    return a;
  }

  double logp(const ParamVector& params, const Obs& obs, const Conditioning& cond,
              const Action& a) const override {
    require(static_cast<int>(a.continuous.size()) == act_dim_, "logp: action dim mismatch");
    const auto z = input(obs, cond);
    double lp = 0.0;
    for (int j = 0; j < act_dim_; ++j) {
      const double ls = params[logstd_off() + j];
      const double e = (a.continuous[j] - mean_j(params, z, j)) * std::exp(-ls);
      lp += -0.5 * e * e - ls - 0.918938533204672742;  // 0.5*log(2*pi)
    }
    return lp;
  }

  ParamVector score(const ParamVector& params, const Obs& obs, const Conditioning& cond,
                    const Action& a) const override {
    const auto z = input(obs, cond);
    ParamVector g(param_dim());
    for (int j = 0; j < act_dim_; ++j) {
      const double ls = params[logstd_off() + j];
      const double inv_var = std::exp(-2.0 * ls);
      const double e = a.continuous[j] - mean_j(params, z, j);
      const double dmu = e * inv_var;
      for (int k = 0; k < in_dim_; ++k) g[j * in_dim_ + k] = dmu * z[k];
      g[bias_off() + j] = dmu;
      g[logstd_off() + j] = e * e * inv_var - 1.0;
    }
    return g;
  }

  ParamVector logp_hvp(const ParamVector& params, const Obs& obs, const Conditioning& cond,
                       const Action& a, const ParamVector& v) const override {
    require(v.dim() == param_dim(), "logp_hvp: v dim mismatch");
    const auto z = input(obs, cond);
    ParamVector h(param_dim());
    for (int j = 0; j < act_dim_; ++j) {
      const double ls = params[logstd_off() + j];
      const double inv_var = std::exp(-2.0 * ls);
      const double e = a.continuous[j] - mean_j(params, z, j);
      // v projected onto this output's extended input [z; 1]
      double vu = v[bias_off() + j];
      for (int k = 0; k < in_dim_; ++k) vu += v[j * in_dim_ + k] * z[k];
      const double vls = v[logstd_off() + j];
      const double hmu = -inv_var * vu - 2.0 * e * inv_var * vls;
      for (int k = 0; k < in_dim_; ++k) h[j * in_dim_ + k] = hmu * z[k];
      h[bias_off() + j] = hmu;
      h[logstd_off() + j] = -2.0 * e * inv_var * vu - 2.0 * e * e * inv_var * vls;
    }
    return h;
  }

  double kl(const ParamVector& new_params, const ParamVector& old_params, const Obs& obs,
            const Conditioning& cond) const override {
    const auto z = input(obs, cond);
    double d = 0.0;
    for (int j = 0; j < act_dim_; ++j) {
      const double lsn = new_params[logstd_off() + j];
      const double lso = old_params[logstd_off() + j];
      const double dm = mean_j(new_params, z, j) - mean_j(old_params, z, j);
      const double vn = std::exp(2.0 * lsn), vo = std::exp(2.0 * lso);
      d += lso - lsn + (vn + dm * dm) / (2.0 * vo) - 0.5;
    }
    return d;
  }

 private:
  std::vector<double> input(const Obs& obs, const Conditioning& cond) const {
    std::vector<double> z;
    z.reserve(obs.features.size() + cond.features.size());
    z.insert(z.end(), obs.features.begin(), obs.features.end());
    z.insert(z.end(), cond.features.begin(), cond.features.end());
    require(static_cast<int>(z.size()) == in_dim_, "LinearGaussianPolicy: input dim mismatch");
    return z;
  }
  double mean_j(const ParamVector& params, const std::vector<double>& z, int j) const {
    double m = params[bias_off() + j];
    for (int k = 0; k < in_dim_; ++k) m += params[j * in_dim_ + k] * z[k];
    return m;
  }
  int bias_off() const { return act_dim_ * in_dim_; }
  int logstd_off() const { return act_dim_ * in_dim_ + act_dim_; }

  int in_dim_, act_dim_;
  double init_log_std_;
};

// ------------------------------------------------------------ MLP softmax --

// One tanh hidden layer feeding action logits; hand-rolled backprop for the
// score. No analytic log-density Hessian.
class MlpSoftmaxPolicy final : public PolicyFamily {
 public:
  MlpSoftmaxPolicy(int in_dim, int hidden, int n_actions)
      : in_dim_(in_dim), hidden_(hidden), n_actions_(n_actions) {
    require(in_dim >= 1 && hidden >= 1 && n_actions >= 2, "MlpSoftmaxPolicy: bad shape");
  }

  int param_dim() const override { return hidden_ * in_dim_ + hidden_ + n_actions_ * hidden_ + n_actions_; }
  bool supports_logp_hvp() const override { return false; }

  ParamVector init_params(RngStream& rng) const override {
    ParamVector p(param_dim());
    const double a1 = 1.0 / std::sqrt(static_cast<double>(in_dim_));
    for (int i = 0; i < hidden_ * in_dim_; ++i) p[i] = rng.uniform(-a1, a1);
    const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
    for (int i = 0; i < n_actions_ * hidden_; ++i) p[w2_off() + i] = rng.uniform(-a2, a2);
    return p;
  }

  std::vector<double> probs(const ParamVector& params, const Obs& obs,
                            const Conditioning& cond) const {
    std::vector<double> hid, p;
    forward(params, obs, cond, hid, p);
    return p;
  }

  Action sample(const ParamVector& params, const Obs& obs, const Conditioning& cond,
                RngStream& rng, double* logp_out) const override {
    const auto p = probs(params, obs, cond);
    Action a;
    a.id = rng.categorical(p);
    if (logp_out) *logp_out = std::log(p[a.id]);
    return a;
  }

  double logp(const ParamVector& params, const Obs& obs, const Conditioning& cond,
              const Action& a) const override {
    require(a.id >= 0 && a.id < n_actions_, "MlpSoftmaxPolicy: action id out of range");
    const auto p = probs(params, obs, cond);
    if (p[a.id] <= 0.0) throw EnvError("MlpSoftmaxPolicy: logp of masked action");
    return std::log(p[a.id]);
  }

  ParamVector score(const ParamVector& params, const Obs& obs, const Conditioning& cond,
                    const Action& a) const override {
    require(a.id >= 0 && a.id < n_actions_, "MlpSoftmaxPolicy: action id out of range");
    std::vector<double> hid, p;
    const auto z = input(obs, cond);
    forward(params, obs, cond, hid, p);
    ParamVector g(param_dim());
    std::vector<double> dlogit(n_actions_, 0.0);
    for (int k = 0; k < n_actions_; ++k)
      if (p[k] > 0.0) dlogit[k] = (k == a.id ? 1.0 : 0.0) - p[k];
    std::vector<double> dhid(hidden_, 0.0);
    for (int k = 0; k < n_actions_; ++k) {
      for (int j = 0; j < hidden_; ++j) {
        g[w2_off() + k * hidden_ + j] = dlogit[k] * hid[j];
        dhid[j] += params[w2_off() + k * hidden_ + j] * dlogit[k];
      }
      g[b2_off() + k] = dlogit[k];
    }
    for (int j = 0; j < hidden_; ++j) {
      const double dpre = dhid[j] * (1.0 - hid[j] * hid[j]);
      for (int i = 0; i < in_dim_; ++i) g[j * in_dim_ + i] = dpre * z[i];
      g[b1_off() + j] = dpre;
    }
    return g;
  }

  double kl(const ParamVector& new_params, const ParamVector& old_params, const Obs& obs,
            const Conditioning& cond) const override {
    const auto pn = probs(new_params, obs, cond);
    const auto po = probs(old_params, obs, cond);
    double d = 0.0;
    for (int k = 0; k < n_actions_; ++k)
      if (pn[k] > 0.0) d += pn[k] * (std::log(pn[k]) - std::log(po[k]));
    return d;
  }

 private:
  std::vector<double> input(const Obs& obs, const Conditioning& cond) const {
    std::vector<double> z;
    z.insert(z.end(), obs.features.begin(), obs.features.end());
    z.insert(z.end(), cond.features.begin(), cond.features.end());
    require(static_cast<int>(z.size()) == in_dim_, "MlpSoftmaxPolicy: input dim mismatch");
    return z;
  }

  void forward(const ParamVector& params, const Obs& obs, const Conditioning& cond,
               std::vector<double>& hid, std::vector<double>& p) const {
    require(params.dim() == param_dim(), "MlpSoftmaxPolicy: param dim mismatch");
    const auto z = input(obs, cond);
    hid.assign(hidden_, 0.0);
    for (int j = 0; j < hidden_; ++j) {
      double pre = params[b1_off() + j];
      for (int i = 0; i < in_dim_; ++i) pre += params[j * in_dim_ + i] * z[i];
      hid[j] = std::tanh(pre);
    }
    std::vector<double> logit(n_actions_, 0.0);
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_actions_; ++k) {
      double l = params[b2_off() + k];
      for (int j = 0; j < hidden_; ++j) l += params[w2_off() + k * hidden_ + j] * hid[j];
      const bool ok = obs.mask.empty() || obs.mask[static_cast<std::size_t>(k)] != 0;
      logit[k] = ok ? l : -std::numeric_limits<double>::infinity();
      if (ok) mx = std::max(mx, l);
    }
    if (!std::isfinite(mx)) throw EnvError("MlpSoftmaxPolicy: no valid action");
    p.assign(n_actions_, 0.0);
    double zsum = 0.0;
    for (int k = 0; k < n_actions_; ++k) {
      if (!std::isfinite(logit[k])) continue;
      p[k] = std::exp(logit[k] - mx);
      zsum += p[k];
    }
    for (double& x : p) x /= zsum;
  }

  int b1_off() const { return hidden_ * in_dim_; }
  int w2_off() const { return hidden_ * in_dim_ + hidden_; }
  int b2_off() const { return w2_off() + n_actions_ * hidden_; }

  int in_dim_, hidden_, n_actions_;
};

}  // namespace sgame
