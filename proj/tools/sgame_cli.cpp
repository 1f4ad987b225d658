#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sgame/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stackelberg co-design trainer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(SGAME_VERSION));

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string level = "fast";
  std::string lambdas = "0.5,1,5,10,inf";
  int n_seeds = 5;

  auto* train = app.add_subcommand("train", "run one training job");
  train->add_option("-c,--config", config_path, "config file");
  train->add_option("-s,--set", overrides, "override, key=value (repeatable)");
  train->add_option("-o,--out", out_dir, "output directory");

  auto* verify = app.add_subcommand("verify", "check estimators against oracles");
  verify->add_option("--level", level, "fast | full");

  auto* sweep = app.add_subcommand("sweep", "damping sweep across seeds");
  sweep->add_option("-c,--config", config_path, "config file");
  sweep->add_option("-s,--set", overrides, "override, key=value (repeatable)");
  sweep->add_option("-o,--out", out_dir, "output directory");
  sweep->add_option("--lambdas", lambdas, "comma-separated damping values, inf = undamped baseline");
  sweep->add_option("--seeds", n_seeds, "seeds per damping value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sgame::kExitConfig;
  }

  if (train->parsed()) return sgame::cmd_train(config_path, overrides, out_dir);
  if (verify->parsed()) return sgame::cmd_verify(level);
  return sgame::cmd_sweep(config_path, overrides, out_dir, lambdas, n_seeds);
}
