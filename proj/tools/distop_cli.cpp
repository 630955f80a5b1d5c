#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "distop/harness/recipes.hpp"

namespace {

using distop::harness::json;

int run(const std::string& config_path, std::string recipe, const std::vector<std::string>& overrides,
        const std::string& out_dir) {
  json cfg;
  try {
    const json user = config_path.empty() ? json{{"seed", 0}} : distop::harness::load_json_file(config_path);
    if (recipe.empty() && !user.contains("recipe")) throw distop::ConfigError("recipe: missing required field");
    cfg = distop::harness::resolve_config(user, overrides, recipe);
    distop::harness::validate_config(cfg);
  } catch (const distop::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  recipe = cfg["recipe"].get<std::string>();

  std::filesystem::create_directories(out_dir);
  {
    std::ofstream resolved(std::filesystem::path(out_dir) / "resolved_config.json", std::ios::binary);
    resolved << cfg.dump(2) << "\n";
  }
  std::cout << cfg.dump(2) << "\n";

  distop::harness::MetricsWriter metrics((std::filesystem::path(out_dir) / "metrics.jsonl").string());
  const distop::harness::RunOutput out{out_dir, &metrics};
  try {
    if (recipe == "repr-study") {
      const auto r = distop::harness::run_repr_study(cfg, out);
      std::cout << "spearman " << r.final.spearman << " far/adjacent " << r.final.far_over_adjacent << "\n";
    } else if (recipe == "entropy-study") {
      const auto r = distop::harness::run_entropy_study(cfg, out);
      std::cout << "entropy " << r.distop_entropy << " baseline " << r.baseline_entropy << " ratio " << r.ratio << "\n";
    } else if (recipe == "sparse-maze") {
      const auto r = distop::harness::run_sparse_maze(cfg, out);
      std::cout << r.agent << " best success " << r.best_success << " after " << r.env_steps << " steps\n";
    } else {
      const auto r = distop::harness::run_unit_oracles(cfg, out);
      std::cout << "oracles " << (r.passed ? "passed" : "failed") << "\n";
      return r.passed ? 0 : 1;
    }
  } catch (const distop::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const distop::NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Growing-topology skill discovery experiments"};
  app.require_subcommand(1);

  std::string config_path, recipe, out_dir = "runs/latest";
  std::vector<std::string> overrides;
  auto* run_cmd = app.add_subcommand("run", "Run a recipe");
  run_cmd->add_option("--config", config_path, "JSON config file");
  run_cmd->add_option("--recipe", recipe, "repr-study | entropy-study | sparse-maze | unit-oracles")
      ->check(CLI::IsMember(distop::harness::recipe_names()));
  run_cmd->add_option("--set", overrides, "Override a key, e.g. --set oegn.delta_new=0.8");
  run_cmd->add_option("--out", out_dir, "Run directory");

  std::string profile;
  auto* defaults_cmd = app.add_subcommand("defaults", "Print the default config of a profile");
  defaults_cmd->add_option("profile", profile, "four-rooms | repr-study | sparse-maze")->required();

  CLI11_PARSE(app, argc, argv);

  if (*defaults_cmd) {
    try {
      std::cout << distop::harness::profile_defaults(profile).dump(2) << "\n";
    } catch (const distop::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
    return 0;
  }
  return run(config_path, recipe, overrides, out_dir);
}
