#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "sgame/cli.hpp"

using namespace sgame;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cmd(const std::string& cmd) {
  const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

const char* sgame_bin() { return std::getenv("SGAME_BIN"); }

const char* kTinyConfig =
    "[run]\n"
    "seed = 3\n"
    "[env]\n"
    "name = \"tabular_codesign\"\n"
    "[train]\n"
    "gamma = 0.9\n"
    "epochs = 2\n"
    "batch_trajectories = 8\n"
    "value_epochs = 5\n"
    "ppo_iters_per_batch = 2\n"
    "leader_lr = 1e-3\n"
    "follower_lr = 1e-3\n";

struct TmpDir {
  fs::path path;
  explicit TmpDir(const char* name) : path(fs::path("cli_tmp") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config text parses sections, comments, and quotes") {
  const ConfigMap m = parse_config_text(
      "# leading comment\n"
      "[run]\n"
      "seed = 7   # trailing comment\n"
      "\n"
      "[env]\n"
      "name = \"tabular_codesign\"  # quoted\n");
  CHECK(m.at("run.seed") == "7");
  CHECK(m.at("env.name") == "tabular_codesign");
  CHECK(m.size() == 2);
}

TEST_CASE("config parsing rejects malformed input") {
  CHECK_THROWS_AS(parse_config_text("[run\nseed = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("just words\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("= 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[run]\nseed = 1\nseed = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_file("no_such_file.toml"), ConfigError);
}

TEST_CASE("overrides replace and extend the map") {
  ConfigMap m = parse_config_text("[train]\nepochs = 5\n");
  apply_overrides(m, {"train.epochs=9", "train.gamma=0.5"});
  CHECK(m.at("train.epochs") == "9");
  CHECK(m.at("train.gamma") == "0.5");
  CHECK_THROWS_AS(apply_overrides(m, {"no_equals_sign"}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(m, {"=value"}), ConfigError);
}

TEST_CASE("run specs reject unknown keys and bad values") {
  CHECK_THROWS_AS(run_spec_from_map(parse_config_text("[train]\nepoch = 5\n")), ConfigError);
  CHECK_THROWS_AS(run_spec_from_map(parse_config_text("[env]\nname = \"mars\"\n")), ConfigError);
  CHECK_THROWS_AS(run_spec_from_map(parse_config_text("[train]\nmode = \"pg\"\n")), ConfigError);
  CHECK_THROWS_AS(run_spec_from_map(parse_config_text("[train]\nepochs = \"many\"\n")), ConfigError);
  CHECK_THROWS_AS(run_spec_from_map(parse_config_text("[train]\ngamma = 2.0\n")), DimensionError);
  // meta entries are tolerated for manifests
  CHECK_NOTHROW(run_spec_from_map(parse_config_text("[meta]\nversion = \"x\"\n")));
}

TEST_CASE("clip epsilon accepts the none sentinel") {
  const RunSpec a = run_spec_from_map(parse_config_text("[train]\nppo_clip_eps = \"none\"\n"));
  CHECK_FALSE(a.train.clip_enabled);
  const RunSpec b = run_spec_from_map(parse_config_text("[train]\nppo_clip_eps = 0.3\n"));
  CHECK(b.train.clip_enabled);
  CHECK(b.train.ppo_clip_eps == 0.3);
}

TEST_CASE("serialization round-trips the run spec") {
  RunSpec spec;
  spec.env_name = "chain_walker";
  spec.leader_policy = "mlp";
  spec.mlp_hidden = 8;
  spec.follower_truncation = 40;
  spec.chain_dt = 0.025;
  spec.out_dir = "runs/x";
  spec.train.mode = TrainMode::analytic_hessian;
  spec.train.clip_enabled = false;
  spec.train.gamma = 0.97;
  spec.train.epochs = 123;
  spec.train.seed = 99;
  spec.train.fisher_lambda = 0.5;
  const RunSpec back = run_spec_from_map(parse_config_text(serialize_run_spec(spec)));
  CHECK(back.env_name == spec.env_name);
  CHECK(back.leader_policy == spec.leader_policy);
  CHECK(back.mlp_hidden == spec.mlp_hidden);
  CHECK(back.follower_truncation == spec.follower_truncation);
  CHECK(back.chain_dt == spec.chain_dt);
  CHECK(back.out_dir == spec.out_dir);
  CHECK(back.train.mode == spec.train.mode);
  CHECK(back.train.clip_enabled == spec.train.clip_enabled);
  CHECK(back.train.gamma == spec.train.gamma);
  CHECK(back.train.epochs == spec.train.epochs);
  CHECK(back.train.seed == spec.train.seed);
  CHECK(back.train.fisher_lambda == spec.train.fisher_lambda);
}

TEST_CASE("environment construction honors the run config") {
  RunSpec spec;
  spec.follower_truncation = 5;
  const auto tab = make_env(spec);
  CHECK(tab->name() == "tabular_codesign");
  CHECK(tab->follower_step_cap() == 5);
  spec.leader_horizon = 3;
  CHECK_THROWS_AS(make_env(spec), ConfigError);

  RunSpec cw;
  cw.env_name = "chain_walker";
  cw.leader_horizon = 4;
  cw.follower_truncation = 50;
  cw.chain_dt = 0.1;
  const auto env = make_env(cw);
  CHECK(env->name() == "chain_walker");
  CHECK(env->leader_horizon() == 4);
  CHECK(env->follower_step_cap() == 50);
}

TEST_CASE("csv headers are pinned") {
  CHECK(std::string(kMetricsCsvHeader) ==
        "epoch,env_steps,leader_return,follower_return,kl,clip_frac,cg_iters,cg_converged,alpha,wall_ms");
  CHECK(std::string(kSweepCsvHeader) == "lambda,seed,final_return");
}

TEST_CASE("metrics csv is deterministic and zeroes the wall clock column") {
  EpochMetrics m;
  m.epoch = 1;
  m.env_steps = 80;
  m.leader_return = 0.5;
  m.follower_return = -0.25;
  m.kl = 1e-4;
  m.clip_frac = 0.125;
  m.cg_iters = 3;
  m.cg_converged = true;
  m.alpha = 1.0;
  m.wall_ms = 123.456;  // measured, but not serialized
  const std::string csv = metrics_csv({m});
  std::istringstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == kMetricsCsvHeader);
  CHECK(row.substr(row.size() - 2) == ",0");
  CHECK(row.rfind("1,80,", 0) == 0);
}

TEST_CASE("sweep csv encodes the undamped arm as inf") {
  SweepRow a{5.0, 3, 1.5};
  SweepRow b{std::numeric_limits<double>::infinity(), 4, -0.5};
  const std::string csv = sweep_csv({a, b});
  CHECK(csv.find("inf,4,") != std::string::npos);
  CHECK(csv.rfind(kSweepCsvHeader, 0) == 0);
}

TEST_CASE("output directory resolution order") {
  RunSpec spec;
  spec.out_dir = "from_config";
  unsetenv("SGAME_OUT_DIR");
  CHECK(clidetail::resolve_out_dir("from_flag", spec) == "from_flag");
  CHECK(clidetail::resolve_out_dir("", spec) == "from_config");
  setenv("SGAME_OUT_DIR", "from_env", 1);
  CHECK(clidetail::resolve_out_dir("", spec) == "from_env");
  CHECK(clidetail::resolve_out_dir("from_flag", spec) == "from_flag");
  unsetenv("SGAME_OUT_DIR");
  spec.out_dir.clear();
  CHECK(clidetail::resolve_out_dir("", spec) == "runs/tabular_codesign");
}

TEST_CASE("verify subcommand rejects unknown levels in process") {
  CHECK(cmd_verify("bogus") == kExitConfig);
}

TEST_CASE("lambda list parsing") {
  const auto v = clidetail::parse_lambda_list("0.5, 1,5,inf");
  REQUIRE(v.size() == 4);
  CHECK(v[0] == 0.5);
  CHECK(v[2] == 5.0);
  CHECK(std::isinf(v[3]));
  CHECK_THROWS_AS(clidetail::parse_lambda_list(""), ConfigError);
  CHECK_THROWS_AS(clidetail::parse_lambda_list("1,,2"), ConfigError);
  CHECK_THROWS_AS(clidetail::parse_lambda_list("abc"), ConfigError);
  CHECK_THROWS_AS(clidetail::parse_lambda_list("-1"), ConfigError);
}

TEST_CASE("train subcommand writes a manifest and identical reruns") {
  const char* bin = sgame_bin();
  REQUIRE(bin != nullptr);
  TmpDir tmp("train");
  const fs::path cfg = tmp.path / "cfg.toml";
  {
    std::ofstream f(cfg);
    f << kTinyConfig;
  }
  const fs::path out1 = tmp.path / "out1", out2 = tmp.path / "out2";
  const std::string base = std::string(bin) + " train -c " + cfg.string();
  REQUIRE(run_cmd(base + " -o " + out1.string()) == 0);
  REQUIRE(run_cmd(base + " -o " + out2.string()) == 0);
  REQUIRE(fs::exists(out1 / "manifest.txt"));
  REQUIRE(fs::exists(out1 / "metrics.csv"));
  const std::string manifest = slurp(out1 / "manifest.txt");
  CHECK(manifest.find("environment = \"tabular_codesign\"") != std::string::npos);
  CHECK(manifest.find("[train]") != std::string::npos);
  const std::string m1 = slurp(out1 / "metrics.csv");
  CHECK(m1 == slurp(out2 / "metrics.csv"));
  // header plus one row per epoch
  CHECK(static_cast<int>(std::count(m1.begin(), m1.end(), '\n')) == 3);
  CHECK(m1.rfind(kMetricsCsvHeader, 0) == 0);
}

TEST_CASE("train subcommand exits 2 on config errors") {
  const char* bin = sgame_bin();
  REQUIRE(bin != nullptr);
  TmpDir tmp("badcfg");
  const fs::path cfg = tmp.path / "bad.toml";
  {
    std::ofstream f(cfg);
    f << "[train]\nepoch = 5\n";
  }
  CHECK(run_cmd(std::string(bin) + " train -c " + cfg.string() + " -o " +
                (tmp.path / "out").string()) == 2);
  CHECK(run_cmd(std::string(bin) + " train -c no_such.toml -o " + (tmp.path / "out").string()) == 2);
  CHECK(run_cmd(std::string(bin) + " verify --level bogus") == 2);
  CHECK(run_cmd(std::string(bin) + " nonsense") == 2);
}

TEST_CASE("sweep subcommand writes the grid") {
  const char* bin = sgame_bin();
  REQUIRE(bin != nullptr);
  TmpDir tmp("sweep");
  const fs::path cfg = tmp.path / "cfg.toml";
  {
    std::ofstream f(cfg);
    f << kTinyConfig;
  }
  const fs::path out = tmp.path / "out";
  REQUIRE(run_cmd(std::string(bin) + " sweep -c " + cfg.string() + " -o " + out.string() +
                  " --lambdas 5,inf --seeds 1 -s train.epochs=1") == 0);
  const std::string csv = slurp(out / "sweep.csv");
  CHECK(csv.rfind(kSweepCsvHeader, 0) == 0);
  CHECK(static_cast<int>(std::count(csv.begin(), csv.end(), '\n')) == 3);
  CHECK(csv.find("inf,3,") != std::string::npos);
}
