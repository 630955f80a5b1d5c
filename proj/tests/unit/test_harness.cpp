#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "distop/harness/recipes.hpp"
#include "support/fixtures.hpp"

using namespace distop;
using harness::json;
namespace fs = std::filesystem;

namespace {

json base(const std::string& recipe = "entropy-study") { return json{{"recipe", recipe}, {"seed", 0}}; }

std::string error_of(const json& user, const std::vector<std::string>& overrides = {}) {
  try {
    harness::validate_config(harness::resolve_config(user, overrides));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("distop_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DISTOP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kTinyRun =
    "--set run.max_env_steps=1200 --set repr.neurons=16 --set sac.neurons=16 --set run.log_interval=300 "
    "--set loop.warmup_episodes=4";

}  // namespace

TEST(Entropy, KnownValues) {
  EXPECT_NEAR(harness::visitation_entropy(std::vector<long>{5, 5, 5, 5}), std::log(4.0), 1e-12);
  EXPECT_EQ(harness::visitation_entropy(std::vector<long>{0, 9, 0}), 0.0);
  EXPECT_EQ(harness::visitation_entropy(std::vector<long>{}), 0.0);
  EXPECT_NEAR(harness::visitation_entropy(std::vector<long>{1, 3}), -(0.25 * std::log(0.25) + 0.75 * std::log(0.75)), 1e-12);
  EXPECT_THROW(harness::visitation_entropy(std::vector<long>{1, -1}), InvalidArgument);
}

TEST(Spearman, RanksAndCorrelation) {
  EXPECT_EQ(harness::average_ranks({10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
  EXPECT_NEAR(harness::spearman({1, 2, 3, 4}, {1, 8, 27, 64}), 1.0, 1e-12);
  EXPECT_NEAR(harness::spearman({1, 2, 3}, {3, 2, 1}), -1.0, 1e-12);
  // Hand-computed: d = (0, -2, 1, 1), 1 - 6 * 6 / (4 * 15) = 0.4.
  EXPECT_NEAR(harness::spearman({1, 2, 3, 4}, {1, 4, 2, 3}), 0.4, 1e-12);
  EXPECT_EQ(harness::spearman({1, 1, 1}, {1, 2, 3}), 0.0);
  EXPECT_THROW(harness::spearman({1}, {1}), InvalidArgument);
}

TEST(TopologyScore, CoordinateEmbeddingOfAnOpenRoom) {
  envs::GridWorldConfig cfg;
  cfg.observation = envs::ObservationMode::kXY;
  const envs::GridWorld env(envs::parse_grid_map(envs::layouts::open_room(12)), cfg);
  const auto s = harness::score_topology(env, fixtures::identity_encoder(2), true);
  EXPECT_EQ(s.pairs, 144u * 143 / 2);
  EXPECT_GT(s.spearman, 0.95);
  EXPECT_NEAR(s.mean_adjacent, 2.0 / 13.0, 1e-12);
  EXPECT_GT(s.far_over_adjacent, 8.0);
}

TEST(Config, ProfilesShareOneSchema) {
  const auto keys = harness::leaf_keys(harness::profile_defaults("four-rooms"));
  for (const char* p : {"repr-study", "sparse-maze"}) EXPECT_EQ(harness::leaf_keys(harness::profile_defaults(p)), keys);
  EXPECT_THROW(harness::profile_defaults("mountain-car"), ConfigError);
  for (const auto& r : harness::recipe_names()) EXPECT_NO_THROW(harness::validate_config(harness::resolve_config(base(r))));
}

TEST(Config, RecipeSelectsProfile) {
  EXPECT_EQ(harness::resolve_config(base("sparse-maze"))["env"]["kind"], "point_maze");
  EXPECT_EQ(harness::resolve_config(base("repr-study"))["env"]["observation"], "one_hot_binary");
  auto user = base("entropy-study");
  user["profile"] = "sparse-maze";
  EXPECT_EQ(harness::resolve_config(user)["profile"], "sparse-maze");
  EXPECT_EQ(harness::resolve_config(json{{"seed", 3}}, {}, "repr-study")["recipe"], "repr-study");
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_NE(error_of(json{{"seed", 0}}).find("recipe"), std::string::npos);
  EXPECT_NE(error_of(json{{"recipe", "entropy-study"}}).find("seed"), std::string::npos);
  EXPECT_NE(error_of(base("dance")).find("recipe"), std::string::npos);

  auto user = base();
  user["oegn"] = {{"delta_nwe", 0.5}};
  EXPECT_NE(error_of(user).find("oegn.delta_nwe: unknown field"), std::string::npos);
  user = base();
  user["sac"] = {{"gamma", "high"}};
  EXPECT_NE(error_of(user).find("sac.gamma"), std::string::npos);
  user = base();
  user["repr"] = {{"d", 2.5}};
  EXPECT_NE(error_of(user).find("repr.d"), std::string::npos);
  user = base();
  user["repr"] = {{"delta", nullptr}};
  EXPECT_NE(error_of(user).find("must not be null"), std::string::npos);
  user = base();
  user["seed"] = -1;
  EXPECT_NE(error_of(user).find("seed"), std::string::npos);

  EXPECT_NE(error_of(base(), {"sac.gamma=1.0"}).find("sac.gamma"), std::string::npos);
  EXPECT_NE(error_of(base(), {"env.layout=spiral"}).find("env.layout"), std::string::npos);
  EXPECT_NE(error_of(base(), {"env.observation=pixels"}).find("observation"), std::string::npos);
  EXPECT_NE(error_of(base(), {"sampling.relabel_strategy=future"}).find("sampling.relabel_strategy"), std::string::npos);
  EXPECT_NE(error_of(base(), {"run.agent=random"}).find("run.agent"), std::string::npos);
  EXPECT_NE(error_of(base(), {"repr.n_neg=64"}).find("repr.n_neg"), std::string::npos);
  EXPECT_NE(error_of(base(), {"novalue"}).find("key=value"), std::string::npos);
  EXPECT_NE(error_of(base(), {"env.map_file=/nonexistent/map.txt"}).find("env.map_file"), std::string::npos);
}

TEST(Config, OverridesAndNullableKeys) {
  const auto cfg = harness::resolve_config(base(), {"oegn.delta_new=0.8", "env.layout=open_room", "oegn.delta_prox=0.1"});
  EXPECT_EQ(cfg["oegn"]["delta_new"], 0.8);
  EXPECT_EQ(cfg["env"]["layout"], "open_room");
  const auto sc = harness::system_config(cfg);
  EXPECT_EQ(sc.oegn.prox(), 0.1);
  EXPECT_EQ(sc.oegn.delta_success, kInf);

  const auto defaults = harness::system_config(harness::resolve_config(base()));
  EXPECT_DOUBLE_EQ(defaults.oegn.prox(), 0.4 * defaults.oegn.delta_new);

  auto user = base();
  user["oegn"] = {{"delta_success", 2}};
  user["high_level"] = {{"alpha_c", 0.1}, {"neighbors_learning_rate", 0.02}};
  const auto sc2 = harness::system_config(harness::resolve_config(user));
  EXPECT_EQ(sc2.oegn.delta_success, 2.0);
  EXPECT_DOUBLE_EQ(sc2.selector.neighbor_rate * sc2.selector.alpha_c, 0.02);
}

TEST(Config, TypedViewsCarryValues) {
  const auto cfg = harness::resolve_config(base("sparse-maze"), {"seed=5", "env.horizon=120", "sac.neurons=32"});
  const auto es = harness::env_spec(cfg);
  EXPECT_EQ(es.maze.horizon, 120);
  const auto sc = harness::system_config(cfg);
  EXPECT_EQ(sc.seed, 5u);
  EXPECT_EQ(sc.sac.hidden, (std::vector<int>{32, 32}));
  EXPECT_EQ(sc.encoder.hidden, (std::vector<int>{256, 256}));
  EXPECT_EQ(harness::run_spec(cfg).early_stop_success, 0.8);
}

TEST(Export, SnapshotParsesBackAsGraph) {
  envs::GridWorldConfig cfg;
  cfg.observation = envs::ObservationMode::kXY;
  const envs::GridWorld env(envs::parse_grid_map(envs::layouts::open_room(3)), cfg);
  topology::TopologyGraph g(topology::OegnConfig{}, 2);
  const NodeId a = g.add_node(Eigen::Vector2d(0, 0));
  const NodeId b = g.add_node(Eigen::Vector2d(1, 0));
  g.set_edge(a, b, 4);
  std::ostringstream out;
  harness::write_topology_snapshot(out, g, fixtures::identity_encoder(2), env);
  const std::string text = out.str();
  std::size_t cells = 0, adj = 0;
  std::istringstream in(text);
  std::string graph_part;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("cell ", 0) == 0) {
      ++cells;
    } else if (line.rfind("adj ", 0) == 0) {
      ++adj;
    } else {
      graph_part += line + "\n";
    }
  }
  EXPECT_EQ(cells, 9u);
  EXPECT_EQ(adj, 12u);
  EXPECT_TRUE(topology::same_structure(topology::graph_from_string(graph_part, topology::OegnConfig{}), g));
  EXPECT_THROW(harness::write_topology_snapshot(out, topology::TopologyGraph(topology::OegnConfig{}, 2)), InvalidArgument);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("codes");
  EXPECT_EQ(run_cli("defaults four-rooms"), 0);
  EXPECT_EQ(run_cli("defaults nowhere"), 2);
  EXPECT_EQ(run_cli("run --out " + dir.string()), 2);  // no recipe anywhere
  EXPECT_EQ(run_cli("run --recipe entropy-study --set oegn.bogus=1 --out " + dir.string()), 2);

  const auto bad = dir / "bad.json";
  std::ofstream(bad) << "{\"recipe\": \"entropy-study\", \"seed\": 0, \"sac\": {\"gamma\": 2}}";
  EXPECT_EQ(run_cli("run --config " + bad.string() + " --out " + dir.string()), 2);
  std::ofstream(bad) << "{ not json";
  EXPECT_EQ(run_cli("run --config " + bad.string() + " --out " + dir.string()), 2);

  EXPECT_EQ(run_cli("run --recipe unit-oracles --out " + (dir / "oracles").string()), 0);

  const auto abort_dir = dir / "abort";
  EXPECT_EQ(run_cli(std::string("run --recipe entropy-study ") + kTinyRun + " --set sac.learning_rate=1e200 --out " + abort_dir.string()), 3);
  EXPECT_TRUE(fs::exists(abort_dir / "abort_checkpoint.bin"));
  EXPECT_NO_THROW(nn::read_checkpoint((abort_dir / "abort_checkpoint.bin").string()));
}

TEST(Cli, SameSeedGivesIdenticalArtefacts) {
  const auto dir = scratch_dir("determinism");
  for (const char* run : {"a", "b"}) {
    ASSERT_EQ(run_cli(std::string("run --recipe entropy-study ") + kTinyRun + " --set seed=4 --out " + (dir / run).string()), 0);
  }
  for (const char* file : {"metrics.jsonl", "topology.txt", "resolved_config.json", "checkpoint.bin"}) {
    EXPECT_EQ(read_file(dir / "a" / file), read_file(dir / "b" / file)) << file;
  }
  const std::string metrics = read_file(dir / "a" / "metrics.jsonl");
  EXPECT_NE(metrics.find("\"kind\":\"summary\""), std::string::npos);
  EXPECT_NE(metrics.find("\"kind\":\"loss\""), std::string::npos);
  EXPECT_NE(metrics.find("\"kind\":\"interval\""), std::string::npos);
  const auto resolved = json::parse(read_file(dir / "a" / "resolved_config.json"));
  EXPECT_EQ(resolved["seed"], 4);
  EXPECT_EQ(resolved["recipe"], "entropy-study");

  ASSERT_EQ(run_cli(std::string("run --recipe entropy-study ") + kTinyRun + " --set seed=5 --out " + (dir / "c").string()), 0);
  EXPECT_NE(read_file(dir / "a" / "metrics.jsonl"), read_file(dir / "c" / "metrics.jsonl"));
}
