#pragma once

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sgame/config.hpp"
#include "sgame/metrics_io.hpp"
#include "sgame/verify.hpp"

#ifndef SGAME_VERSION
#define SGAME_VERSION "0.1.0+unknown"
#endif

namespace sgame {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;   // verification or acceptance failed
inline constexpr int kExitConfig = 2;    // bad config, flags, or input files
inline constexpr int kExitNumerics = 3;  // non-finite numbers during training

namespace clidetail {

inline std::string timestamp_utc() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open for writing: " + path.string());
  f << text;
  if (!f) throw ConfigError("write failed: " + path.string());
}

// Precedence: --out flag, then SGAME_OUT_DIR, then the config's out_dir, then
// runs/<env_name>.
inline std::string resolve_out_dir(const std::string& flag_value, const RunSpec& spec) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("SGAME_OUT_DIR"); env && *env) return env;
  if (!spec.out_dir.empty()) return spec.out_dir;
  return "runs/" + spec.env_name;
}

inline RunSpec load_run_spec(const std::string& config_path,
                             const std::vector<std::string>& overrides) {
  ConfigMap map = config_path.empty() ? ConfigMap{} : parse_config_file(config_path);
  apply_overrides(map, overrides);
  return run_spec_from_map(map);
}

inline std::vector<double> parse_lambda_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) throw ConfigError("--lambdas: empty entry in \"" + csv + "\"");
    const auto b = item.find_last_not_of(" \t");
    item = item.substr(a, b - a + 1);
    if (item == "inf") {
      out.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      if (!std::isfinite(v) || v < 0.0)
        throw ConfigError("--lambdas: entry must be finite and nonnegative: " + item);
      out.push_back(v);
    } catch (const std::invalid_argument&) {
      throw ConfigError("--lambdas: cannot parse entry \"" + item + "\"");
    } catch (const std::out_of_range&) {
      throw ConfigError("--lambdas: entry out of range \"" + item + "\"");
    }
  }
  if (out.empty()) throw ConfigError("--lambdas: no entries in \"" + csv + "\"");
  return out;
}

}  // namespace clidetail

// train: run one training job, writing manifest.txt before the first epoch and
// metrics.csv after the last.
inline int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
                     const std::string& out_flag) {
  try {
    const RunSpec spec = clidetail::load_run_spec(config_path, overrides);
    const std::string out_dir = clidetail::resolve_out_dir(out_flag, spec);
    std::filesystem::create_directories(out_dir);
    const auto env = make_env(spec);
    clidetail::write_file(std::filesystem::path(out_dir) / "manifest.txt",
                          manifest_text(spec, SGAME_VERSION, clidetail::timestamp_utc(), out_dir));
    std::cout << "sgame train: env=" << spec.env_name << " mode=" << to_string(spec.train.mode)
              << " epochs=" << spec.train.epochs << " out=" << out_dir << "\n";
    const TrainResult res = train(*env, spec.train, [](const EpochMetrics& m) {
      std::printf("epoch %4d  J_L %+10.4f  J_F %+10.4f  kl %8.2e  clip %5.3f  alpha %5.3f  %6.0f ms\n",
                  m.epoch, m.leader_return, m.follower_return, m.kl, m.clip_frac, m.alpha,
                  m.wall_ms);
      std::fflush(stdout);
    });
    clidetail::write_file(std::filesystem::path(out_dir) / "metrics.csv", metrics_csv(res.metrics));
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "metrics.csv").string() << " ("
              << res.metrics.size() << " rows), final return " << final_return(res) << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericsError& e) {
    std::cerr << "numerics error: " << e.what() << "\n";
    return kExitNumerics;
  }
}

// verify: run the estimator checks against their oracles and print a table.
inline int cmd_verify(const std::string& level, const VerifyOptions& opt = {}) {
  std::vector<CheckResult> checks;
  if (level == "fast") {
    checks = fast_checks(opt);
  } else if (level == "full") {
    checks = full_checks(opt);
  } else {
    std::cerr << "config error: --level must be fast or full, got \"" << level << "\"\n";
    return kExitConfig;
  }
  bool all_pass = true;
  std::printf("%-28s %12s %10s %7s %8s\n", "check", "observed", "tol", "result", "secs");
  for (const auto& c : checks) {
    all_pass = all_pass && c.pass;
    std::printf("%-28s %12.3e %10.1e %7s %8.2f\n", c.name.c_str(), c.observed, c.tol,
                c.pass ? "pass" : "FAIL", c.seconds);
  }
  std::printf("%zu checks, %s\n", checks.size(), all_pass ? "all passed" : "FAILURES above");
  return all_pass ? kExitOk : kExitFailure;
}

// sweep: grid over damping values x seeds, writing sweep.csv plus a summary.
inline int cmd_sweep(const std::string& config_path, const std::vector<std::string>& overrides,
                     const std::string& out_flag, const std::string& lambdas_csv, int n_seeds) {
  try {
    if (n_seeds < 1) throw ConfigError("--seeds must be >= 1");
    const std::vector<double> lambdas = clidetail::parse_lambda_list(lambdas_csv);
    const RunSpec spec = clidetail::load_run_spec(config_path, overrides);
    const std::string out_dir = clidetail::resolve_out_dir(out_flag, spec);
    std::filesystem::create_directories(out_dir);
    const auto env = make_env(spec);
    std::cout << "sgame sweep: env=" << spec.env_name << " lambdas=" << lambdas_csv
              << " seeds=" << n_seeds << " out=" << out_dir << "\n";
    const std::vector<SweepRow> rows = lambda_sweep(*env, spec.train, lambdas, n_seeds);
    clidetail::write_file(std::filesystem::path(out_dir) / "sweep.csv", sweep_csv(rows));
    for (const double lam : lambdas) {
      double mean = 0.0, sq = 0.0;
      int n = 0;
      for (const auto& r : rows)
        if (r.lambda == lam || (std::isinf(lam) && std::isinf(r.lambda))) {
          mean += r.final_return;
          sq += r.final_return * r.final_return;
          ++n;
        }
      mean /= n;
      const double sd = std::sqrt(std::max(0.0, sq / n - mean * mean));
      std::printf("lambda %8s  final return %+.4f +- %.4f over %d seeds\n",
                  std::isinf(lam) ? "inf" : std::to_string(lam).c_str(), mean, sd, n);
    }
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "sweep.csv").string() << " ("
              << rows.size() << " rows)\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericsError& e) {
    std::cerr << "numerics error: " << e.what() << "\n";
    return kExitNumerics;
  }
}

}  // namespace sgame
