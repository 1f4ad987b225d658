#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "sgame/trainer.hpp"

namespace sgame {

// Versioned schema constants, pinned by tests. Bump only with a migration note.
inline constexpr const char* kMetricsCsvHeader =
    "epoch,env_steps,leader_return,follower_return,kl,clip_frac,cg_iters,cg_converged,alpha,wall_ms";
inline constexpr const char* kSweepCsvHeader = "lambda,seed,final_return";

// The wall_ms column is written as 0 so the file is a pure function of the
// manifest (reruns must be byte-identical); measured timings go to the console.
inline std::string metrics_csv(const std::vector<EpochMetrics>& ms) {
  std::string out = kMetricsCsvHeader;
  out += "\n";
  char buf[512];
  for (const auto& m : ms) {
    std::snprintf(buf, sizeof(buf), "%d,%ld,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g,0\n", m.epoch,
                  m.env_steps, m.leader_return, m.follower_return, m.kl, m.clip_frac, m.cg_iters,
                  m.cg_converged ? 1 : 0, m.alpha);
    out += buf;
  }
  return out;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = kSweepCsvHeader;
  out += "\n";
  char buf[256];
  for (const auto& r : rows) {
    if (std::isinf(r.lambda))
      std::snprintf(buf, sizeof(buf), "inf,%llu,%.17g\n",
                    static_cast<unsigned long long>(r.seed), r.final_return);
    else
      std::snprintf(buf, sizeof(buf), "%.17g,%llu,%.17g\n", r.lambda,
                    static_cast<unsigned long long>(r.seed), r.final_return);
    out += buf;
  }
  return out;
}

}  // namespace sgame
