#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sgame/trainer.hpp"

namespace sgame {

// Flat key = value configs with [section] headers, a strict TOML subset.
// Dotted keys ("train.epochs") address entries; unknown keys are rejected when
// a RunSpec is built, except under [meta], which manifests use for build info.
using ConfigMap = std::map<std::string, std::string>;

namespace cfgdetail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string strip_comment(const std::string& line) {
  bool in_quote = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_quote = !in_quote;
    if (line[i] == '#' && !in_quote) return line.substr(0, i);
  }
  return line;
}

inline std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

inline std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace cfgdetail

inline ConfigMap parse_config_text(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = cfgdetail::trim(cfgdetail::strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section header");
      section = cfgdetail::trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = cfgdetail::trim(line.substr(0, eq));
    std::string val = cfgdetail::unquote(cfgdetail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (map.count(key)) throw ConfigError("config: duplicate key '" + key + "'");
    map[key] = val;
  }
  return map;
}

inline ConfigMap parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

// "--set section.key=value" overrides, applied on top of the file.
inline void apply_overrides(ConfigMap& map, const std::vector<std::string>& kvs) {
  for (const auto& kv : kvs) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + kv + "': expected key=value");
    map[cfgdetail::trim(kv.substr(0, eq))] =
        cfgdetail::unquote(cfgdetail::trim(kv.substr(eq + 1)));
  }
}

// Everything needed to reproduce one run: seed, environment and its knobs,
// and the full TrainConfig.
struct RunSpec {
  std::string out_dir;  // optional; flag and SGAME_OUT_DIR take precedence
  std::string env_name = "tabular_codesign";
  int leader_horizon = -1;       // -1 keeps the env default
  int follower_truncation = -1;  // -1 keeps the env default
  double chain_dt = 0.05;
  double chain_effort_w = 1e-4;
  double chain_add_cost = 0.01;
  std::string leader_policy = "tabular";  // chain_walker leader family: tabular | mlp
  int mlp_hidden = 16;
  TrainConfig train;
};

inline RunSpec run_spec_from_map(const ConfigMap& map) {
  RunSpec spec;
  for (const auto& [key, raw] : map) {
    using namespace cfgdetail;
    if (key.rfind("meta.", 0) == 0) continue;  // manifest build info, not config
    if (key == "run.seed") spec.train.seed = static_cast<std::uint64_t>(to_int(key, raw));
    else if (key == "run.out_dir") spec.out_dir = raw;
    else if (key == "env.name") spec.env_name = raw;
    else if (key == "env.leader_horizon") spec.leader_horizon = static_cast<int>(to_int(key, raw));
    else if (key == "env.follower_truncation") spec.follower_truncation = static_cast<int>(to_int(key, raw));
    else if (key == "env.chain_dt") spec.chain_dt = to_double(key, raw);
    else if (key == "env.chain_effort_w") spec.chain_effort_w = to_double(key, raw);
    else if (key == "env.chain_add_cost") spec.chain_add_cost = to_double(key, raw);
    else if (key == "env.leader_policy") spec.leader_policy = raw;
    else if (key == "env.mlp_hidden") spec.mlp_hidden = static_cast<int>(to_int(key, raw));
    else if (key == "train.mode") {
      if (raw == "stackelberg") spec.train.mode = TrainMode::stackelberg;
      else if (raw == "vanilla") spec.train.mode = TrainMode::vanilla;
      else if (raw == "analytic_hessian") spec.train.mode = TrainMode::analytic_hessian;
      else throw ConfigError("train.mode: unknown mode '" + raw + "'");
    } else if (key == "train.fisher_lambda") spec.train.fisher_lambda = to_double(key, raw);
    else if (key == "train.ppo_clip_eps") {
      if (raw == "none") spec.train.clip_enabled = false;
      else { spec.train.clip_enabled = true; spec.train.ppo_clip_eps = to_double(key, raw); }
    } else if (key == "train.gamma") spec.train.gamma = to_double(key, raw);
    else if (key == "train.gae_lambda") spec.train.gae_lambda = to_double(key, raw);
    else if (key == "train.leader_lr") spec.train.leader_lr = to_double(key, raw);
    else if (key == "train.follower_lr") spec.train.follower_lr = to_double(key, raw);
    else if (key == "train.value_lr") spec.train.value_lr = to_double(key, raw);
    else if (key == "train.value_epochs") spec.train.value_epochs = static_cast<int>(to_int(key, raw));
    else if (key == "train.ppo_iters_per_batch") spec.train.ppo_iters_per_batch = static_cast<int>(to_int(key, raw));
    else if (key == "train.batch_trajectories") spec.train.batch_trajectories = static_cast<int>(to_int(key, raw));
    else if (key == "train.epochs") spec.train.epochs = static_cast<int>(to_int(key, raw));
    else if (key == "train.cg_max_iters") spec.train.cg_max_iters = static_cast<int>(to_int(key, raw));
    else if (key == "train.cg_rel_tol") spec.train.cg_rel_tol = to_double(key, raw);
    else if (key == "train.normalize_advantages") spec.train.normalize_advantages = to_bool(key, raw);
    else if (key == "train.norm_eps") spec.train.norm_eps = to_double(key, raw);
    else if (key == "train.max_grad_norm") spec.train.max_grad_norm = to_double(key, raw);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  spec.train.validate();
  if (spec.env_name != "tabular_codesign" && spec.env_name != "chain_walker")
    throw ConfigError("env.name: unknown environment '" + spec.env_name + "'");
  if (spec.leader_policy != "tabular" && spec.leader_policy != "mlp")
    throw ConfigError("env.leader_policy: expected tabular or mlp");
  return spec;
}

inline std::unique_ptr<SmgSpec> make_env(const RunSpec& spec) {
  if (spec.env_name == "tabular_codesign") {
    if (spec.leader_horizon > 0 && spec.leader_horizon != TabularCoDesignSMG::kLeaderT)
      throw ConfigError("tabular_codesign has a fixed leader horizon of 2");
    const int cap = spec.follower_truncation > 0 ? spec.follower_truncation : 3;
    return std::make_unique<TabularCoDesignSMG>(cap);
  }
  ChainWalkerConfig c;
  if (spec.leader_horizon > 0) c.leader_T = spec.leader_horizon;
  if (spec.follower_truncation > 0) c.follower_H = spec.follower_truncation;
  c.dt = spec.chain_dt;
  c.effort_w = spec.chain_effort_w;
  c.add_cost = spec.chain_add_cost;
  c.leader_kind = spec.leader_policy == "mlp" ? ChainWalkerConfig::LeaderKind::mlp
                                              : ChainWalkerConfig::LeaderKind::tabular;
  c.mlp_hidden = spec.mlp_hidden;
  return std::make_unique<ChainWalkerEnv>(c);
}

// Canonical serialization; parse(serialize(spec)) reproduces spec exactly.
inline std::string serialize_run_spec(const RunSpec& spec) {
  using cfgdetail::fmt_double;
  std::ostringstream o;
  o << "[run]\n";
  o << "seed = " << spec.train.seed << "\n";
  if (!spec.out_dir.empty()) o << "out_dir = \"" << spec.out_dir << "\"\n";
  o << "\n[env]\n";
  o << "name = \"" << spec.env_name << "\"\n";
  if (spec.leader_horizon > 0) o << "leader_horizon = " << spec.leader_horizon << "\n";
  if (spec.follower_truncation > 0) o << "follower_truncation = " << spec.follower_truncation << "\n";
  if (spec.env_name == "chain_walker") {
    o << "chain_dt = " << fmt_double(spec.chain_dt) << "\n";
    o << "chain_effort_w = " << fmt_double(spec.chain_effort_w) << "\n";
    o << "chain_add_cost = " << fmt_double(spec.chain_add_cost) << "\n";
    o << "leader_policy = \"" << spec.leader_policy << "\"\n";
    o << "mlp_hidden = " << spec.mlp_hidden << "\n";
  }
  const TrainConfig& t = spec.train;
  o << "\n[train]\n";
  o << "mode = \"" << to_string(t.mode) << "\"\n";
  o << "fisher_lambda = " << fmt_double(t.fisher_lambda) << "\n";
  if (t.clip_enabled) o << "ppo_clip_eps = " << fmt_double(t.ppo_clip_eps) << "\n";
  else o << "ppo_clip_eps = \"none\"\n";
  o << "gamma = " << fmt_double(t.gamma) << "\n";
  o << "gae_lambda = " << fmt_double(t.gae_lambda) << "\n";
  o << "leader_lr = " << fmt_double(t.leader_lr) << "\n";
  o << "follower_lr = " << fmt_double(t.follower_lr) << "\n";
  o << "value_lr = " << fmt_double(t.value_lr) << "\n";
  o << "value_epochs = " << t.value_epochs << "\n";
  o << "ppo_iters_per_batch = " << t.ppo_iters_per_batch << "\n";
  o << "batch_trajectories = " << t.batch_trajectories << "\n";
  o << "epochs = " << t.epochs << "\n";
  o << "cg_max_iters = " << t.cg_max_iters << "\n";
  o << "cg_rel_tol = " << fmt_double(t.cg_rel_tol) << "\n";
  o << "normalize_advantages = " << (t.normalize_advantages ? "true" : "false") << "\n";
  o << "norm_eps = " << fmt_double(t.norm_eps) << "\n";
  o << "max_grad_norm = " << fmt_double(t.max_grad_norm) << "\n";
  return o.str();
}

// Written to the output directory before training starts.
inline std::string manifest_text(const RunSpec& spec, const std::string& version,
                                 const std::string& started, const std::string& out_dir) {
  std::ostringstream o;
  o << "[meta]\n";
  o << "version = \"" << version << "\"\n";
  o << "environment = \"" << spec.env_name << "\"\n";
  o << "started = \"" << started << "\"\n";
  o << "output_dir = \"" << out_dir << "\"\n\n";
  o << serialize_run_spec(spec);
  return o.str();
}

}  // namespace sgame
