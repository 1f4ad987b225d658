#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "sgame/envs/tabular_codesign.hpp"

namespace sgame {

// Exact enumeration over all trajectories of the tabular co-design game:
// 4 leader action pairs x 64 follower paths per pair. Everything here is an
// exact expectation under the supplied policy pair; the only approximate
// routes are the *_fd variants, which are central finite differences of the
// enumerated objective and exist to cross-check the score-identity routes.
class EnumerationOracle {
 public:
  EnumerationOracle(const TabularCoDesignSMG& env, double gamma) : env_(env), gamma_(gamma) {
    require(gamma > 0.0 && gamma <= 1.0, "EnumerationOracle: gamma out of range");
  }

  struct Objectives {
    double leader = 0.0;
    double follower = 0.0;
  };

  struct TrajData {
    double prob = 0.0;
    double leader_ret = 0.0;    // full leader objective return of this trajectory
    double follower_ret = 0.0;  // follower objective return
    ParamVector score_leader;   // sum of leader-step scores
    ParamVector score_follower; // sum of follower-step scores
    Trajectory traj;            // populated like a rollout record
  };

  std::vector<TrajData> enumerate(const PolicyFamily& lf, const ParamVector& lp,
                                  const PolicyFamily& ff, const ParamVector& fp) const {
    std::vector<TrajData> out;
    out.reserve(4 * 64);
    const int H = env_.follower_step_cap();
    require(H == 3, "EnumerationOracle: sized for the 3-step follower phase");
    const double g2 = gamma_ * gamma_;  // gamma^T, T = 2

    for (int a0 = 0; a0 < TabularCoDesignSMG::kLeaderActions; ++a0) {
      for (int a1 = 0; a1 < TabularCoDesignSMG::kLeaderActions; ++a1) {
        const int s0 = TabularCoDesignSMG::kStartState;
        const int s1 = env_.leader_next(s0, a0);
        const int s2 = env_.leader_next(s1, a1);
        const int m = s2;
        const std::array<int, 2> ls = {s0, s1};
        const std::array<int, 2> la = {a0, a1};
        const double r0 = env_.leader_reward(s0, a0);
        const double r1 = env_.leader_reward(s1, a1);

        ParamVector lscore(lp.dim());
        double llogp[2];
        double pl = 1.0;
        for (int t = 0; t < 2; ++t) {
          const Obs o = env_.make_leader_obs(ls[t]);
          Action act;
          act.id = la[t];
          llogp[t] = lf.logp(lp, o, Conditioning{}, act);
          pl *= std::exp(llogp[t]);
          lscore += lf.score(lp, o, Conditioning{}, act);
        }

        const Conditioning cond = env_.make_morphology(m);
        // follower paths: start state, then (action, next state) x 3 with the
        // final next state marginalized out
        for (int f0 = 0; f0 < 2; ++f0)
          for (int c0 = 0; c0 < 2; ++c0)
            for (int f1 = 0; f1 < 2; ++f1)
              for (int c1 = 0; c1 < 2; ++c1)
                for (int f2 = 0; f2 < 2; ++f2)
                  for (int c2 = 0; c2 < 2; ++c2) {
                    const std::array<int, 3> fs = {f0, f1, f2};
                    const std::array<int, 3> fa = {c0, c1, c2};
                    double pf = env_.follower_init(m, f0);
                    pf *= env_.follower_trans(m, f0, c0, f1);
                    pf *= env_.follower_trans(m, f1, c1, f2);

                    TrajData d;
                    d.score_leader = lscore;
                    d.score_follower = ParamVector(fp.dim());
                    double ppol = 1.0;
                    double flogp[3];
                    for (int k = 0; k < 3; ++k) {
                      const Obs o = env_.make_follower_obs(m, fs[k]);
                      Action act;
                      act.id = fa[k];
                      flogp[k] = ff.logp(fp, o, cond, act);
                      ppol *= std::exp(flogp[k]);
                      d.score_follower += ff.score(fp, o, cond, act);
                    }
                    d.prob = pl * pf * ppol;

                    const double u0 = env_.follower_reward(m, f0, c0);
                    const double u1 = env_.follower_reward(m, f1, c1);
                    const double u2 = env_.follower_reward(m, f2, c2);
                    d.follower_ret = u0 + gamma_ * u1 + g2 * u2;
                    d.leader_ret = r0 + gamma_ * r1 + g2 * d.follower_ret;

                    Trajectory& tr = d.traj;
                    tr.morphology = cond;
                    tr.truncated = true;
                    for (int t = 0; t < 2; ++t) {
                      StepRecord s;
                      s.obs = env_.make_leader_obs(ls[t]);
                      s.action.id = la[t];
                      s.reward = t == 0 ? r0 : r1;
                      s.behavior_logp = llogp[t];
                      tr.leader_steps.push_back(std::move(s));
                    }
                    const double u[3] = {u0, u1, u2};
                    for (int k = 0; k < 3; ++k) {
                      StepRecord s;
                      s.obs = env_.make_follower_obs(m, fs[k]);
                      s.action.id = fa[k];
                      s.reward = u[k];
                      s.behavior_logp = flogp[k];
                      tr.follower_steps.push_back(std::move(s));
                    }
                    tr.follower_final_obs = env_.make_follower_obs(m, f2);  // best effort; last next state is marginalized
                    fill_togo(tr);
                    out.push_back(std::move(d));
                  }
      }
    }
    return out;
  }

  Objectives objectives(const PolicyFamily& lf, const ParamVector& lp, const PolicyFamily& ff,
                        const ParamVector& fp) const {
    Objectives o;
    double mass = 0.0;
    for (const auto& d : enumerate(lf, lp, ff, fp)) {
      o.leader += d.prob * d.leader_ret;
      o.follower += d.prob * d.follower_ret;
      mass += d.prob;
    }
    if (std::abs(mass - 1.0) > 1e-9) throw NumericsError("EnumerationOracle: probabilities lost mass");
    return o;
  }

  enum class Which {
    leader_obj_d_leader,
    leader_obj_d_follower,
    follower_obj_d_follower,
    follower_obj_d_leader,
  };

  // Score-function identity with exact probabilities: full-return weighting,
  // deliberately a different decomposition than the to-go estimators under test.
  ParamVector grad(Which w, const PolicyFamily& lf, const ParamVector& lp, const PolicyFamily& ff,
                   const ParamVector& fp) const {
    const bool wrt_leader =
        w == Which::leader_obj_d_leader || w == Which::follower_obj_d_leader;
    ParamVector g(wrt_leader ? lp.dim() : fp.dim());
    for (const auto& d : enumerate(lf, lp, ff, fp)) {
      const double ret =
          (w == Which::leader_obj_d_leader || w == Which::leader_obj_d_follower) ? d.leader_ret
                                                                                 : d.follower_ret;
      axpy(d.prob * ret, wrt_leader ? d.score_leader : d.score_follower, g);
    }
    return g;
  }

  // Central finite differences of the enumerated objective, coordinate-wise.
  ParamVector grad_fd(Which w, const PolicyFamily& lf, const ParamVector& lp,
                      const PolicyFamily& ff, const ParamVector& fp, double step) const {
    const bool wrt_leader =
        w == Which::leader_obj_d_leader || w == Which::follower_obj_d_leader;
    const bool leader_obj =
        w == Which::leader_obj_d_leader || w == Which::leader_obj_d_follower;
    const ParamVector& base = wrt_leader ? lp : fp;
    ParamVector g(base.dim());
    for (int i = 0; i < base.dim(); ++i) {
      ParamVector hi = base, lo = base;
      hi[i] += step;
      lo[i] -= step;
      const Objectives oh = wrt_leader ? objectives(lf, hi, ff, fp) : objectives(lf, lp, ff, hi);
      const Objectives ol = wrt_leader ? objectives(lf, lo, ff, fp) : objectives(lf, lp, ff, lo);
      g[i] = ((leader_obj ? oh.leader : oh.follower) - (leader_obj ? ol.leader : ol.follower)) /
             (2.0 * step);
    }
    return g;
  }

  // Exact d2 J^F / d theta^L d theta^F applied to v (leader-dim result).
  ParamVector cross_jvp(const PolicyFamily& lf, const ParamVector& lp, const PolicyFamily& ff,
                        const ParamVector& fp, const ParamVector& v) const {
    ParamVector out(lp.dim());
    for (const auto& d : enumerate(lf, lp, ff, fp))
      axpy(d.prob * d.follower_ret * dot(d.score_follower, v), d.score_leader, out);
    return out;
  }

  // Independent route: finite differences of the enumerated follower gradient
  // along leader coordinates.
  ParamVector cross_jvp_fd(const PolicyFamily& lf, const ParamVector& lp, const PolicyFamily& ff,
                           const ParamVector& fp, const ParamVector& v, double step) const {
    ParamVector out(lp.dim());
    for (int i = 0; i < lp.dim(); ++i) {
      ParamVector hi = lp, lo = lp;
      hi[i] += step;
      lo[i] -= step;
      const ParamVector gh = grad(Which::follower_obj_d_follower, lf, hi, ff, fp);
      const ParamVector gl = grad(Which::follower_obj_d_follower, lf, lo, ff, fp);
      out[i] = (dot(gh, v) - dot(gl, v)) / (2.0 * step);
    }
    return out;
  }

  // Every trajectory once, weighted by its exact probability. Advantage fields
  // carry the discounted-to-phase-start realized to-go (zero baseline), which
  // makes the trajectory-product estimators exact in expectation.
  RolloutBatch exact_batch(const PolicyFamily& lf, const ParamVector& lp, const PolicyFamily& ff,
                           const ParamVector& fp) const {
    RolloutBatch b;
    b.behavior_leader = lp;
    b.behavior_follower = fp;
    for (auto& d : enumerate(lf, lp, ff, fp)) {
      Trajectory tr = d.traj;
      double disc = 1.0;
      for (int t = 0; t < static_cast<int>(tr.leader_steps.size()); ++t) {
        tr.leader_steps[t].advantage = disc * tr.leader_steps[t].ret;
        disc *= gamma_;
      }
      disc = 1.0;
      for (int k = 0; k < static_cast<int>(tr.follower_steps.size()); ++k) {
        tr.follower_steps[k].advantage = disc * tr.follower_steps[k].ret;
        disc *= gamma_;
      }
      b.trajs.push_back(std::move(tr));
      b.weights.push_back(d.prob);
    }
    return b;
  }

  // Dense per-step-mean Fisher of the follower policy, row-major, for the
  // matrix-free product to be checked against.
  std::vector<double> dense_fisher(const PolicyFamily& lf, const ParamVector& lp,
                                   const PolicyFamily& ff, const ParamVector& fp) const {
    const int d = fp.dim();
    std::vector<double> f(static_cast<std::size_t>(d) * d, 0.0);
    double mass = 0.0;
    for (const auto& t : enumerate(lf, lp, ff, fp)) {
      for (const auto& s : t.traj.follower_steps) {
        const ParamVector sc = ff.score(fp, s.obs, t.traj.morphology, s.action);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) f[static_cast<std::size_t>(i) * d + j] += t.prob * sc[i] * sc[j];
        mass += t.prob;
      }
    }
    for (double& x : f) x /= mass;
    return f;
  }

  // Visitation-weighted mean to-go per (morphology, state): the population
  // least-squares target for a joint-indicator value head. Second element of
  // the pair is the visit mass.
  std::vector<std::pair<double, double>> follower_visit_values(const PolicyFamily& lf,
                                                               const ParamVector& lp,
                                                               const PolicyFamily& ff,
                                                               const ParamVector& fp) const {
    std::vector<std::pair<double, double>> acc(
        TabularCoDesignSMG::kMorphs * TabularCoDesignSMG::kFolStates, {0.0, 0.0});
    for (const auto& d : enumerate(lf, lp, ff, fp)) {
      const int m = d.traj.morphology.id;
      for (const auto& s : d.traj.follower_steps) {
        auto& [val, w] = acc[m * TabularCoDesignSMG::kFolStates + s.obs.id];
        val += d.prob * s.ret;
        w += d.prob;
      }
    }
    for (auto& [val, w] : acc)
      if (w > 0.0) val /= w;
    return acc;
  }

  // Brute-force optimum of the leader objective over deterministic policy
  // pairs. The follower tail of the leader objective is the follower objective
  // itself, so the inner maximization is per-morphology.
  double optimal_leader_return() const {
    const int H = env_.follower_step_cap();
    std::array<double, TabularCoDesignSMG::kMorphs> best_f;
    for (int m = 0; m < TabularCoDesignSMG::kMorphs; ++m) {
      double best = -1e300;
      for (int map = 0; map < 4; ++map) {  // action per state, 2 states
        const int act[2] = {map & 1, (map >> 1) & 1};
        std::array<double, 2> v{0.0, 0.0};
        for (int k = H - 1; k >= 0; --k) {
          std::array<double, 2> nv;
          for (int s = 0; s < 2; ++s) {
            double q = env_.follower_reward(m, s, act[s]);
            for (int s2 = 0; s2 < 2; ++s2)
              q += gamma_ * env_.follower_trans(m, s, act[s], s2) * v[s2];
            nv[s] = q;
          }
          v = nv;
        }
        double j = 0.0;
        for (int s = 0; s < 2; ++s) j += env_.follower_init(m, s) * v[s];
        best = std::max(best, j);
      }
      best_f[m] = best;
    }
    const double g2 = gamma_ * gamma_;
    double best = -1e300;
    for (int map = 0; map < 8; ++map) {  // action per leader state
      const int act[3] = {map & 1, (map >> 1) & 1, (map >> 2) & 1};
      const int s0 = TabularCoDesignSMG::kStartState;
      const int s1 = env_.leader_next(s0, act[s0]);
      const int s2 = env_.leader_next(s1, act[s1]);
      const double j = env_.leader_reward(s0, act[s0]) + gamma_ * env_.leader_reward(s1, act[s1]) +
                       g2 * best_f[s2];
      best = std::max(best, j);
    }
    return best;
  }

  double gamma() const { return gamma_; }

 private:
  void fill_togo(Trajectory& tr) const {
    double g = 0.0;
    for (int k = static_cast<int>(tr.follower_steps.size()) - 1; k >= 0; --k) {
      g = tr.follower_steps[k].reward + gamma_ * g;
      tr.follower_steps[k].ret = g;
    }
    double gl = g;
    for (int t = static_cast<int>(tr.leader_steps.size()) - 1; t >= 0; --t) {
      gl = tr.leader_steps[t].reward + gamma_ * gl;
      tr.leader_steps[t].ret = gl;
    }
  }

  const TabularCoDesignSMG& env_;
  double gamma_;
};

}  // namespace sgame
