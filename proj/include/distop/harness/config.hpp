#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "distop/envs/grid_map.hpp"
#include "distop/envs/gridworld.hpp"
#include "distop/envs/point_maze.hpp"
#include "distop/loop/system.hpp"

namespace distop::harness {

using json = nlohmann::ordered_json;

inline const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names = {"repr-study", "entropy-study", "sparse-maze", "unit-oracles"};
  return names;
}

/// Default profile for each recipe.
inline std::string default_profile(const std::string& recipe) {
  if (recipe == "repr-study") return "repr-study";
  if (recipe == "entropy-study") return "four-rooms";
  if (recipe == "sparse-maze") return "sparse-maze";
  if (recipe == "unit-oracles") return "four-rooms";
  throw ConfigError("recipe: unknown recipe '" + recipe + "'");
}

/// Keys whose value may be null. delta_success null means infinity; delta_prox
/// null means 0.4 * delta_new.
inline const std::set<std::string>& nullable_keys() {
  static const std::set<std::string> keys = {"oegn.delta_success", "oegn.delta_prox"};
  return keys;
}

/// Every key of the resolved configuration, with values for one profile.
inline json profile_defaults(const std::string& profile) {
  json c;
  c["recipe"] = "";
  c["profile"] = profile;
  c["seed"] = 0;

  c["env"] = {
      {"kind", "gridworld"},
      {"layout", "four_rooms"},
      {"map_file", ""},
      {"room_size", 7},
      {"observation", "xy_coords"},
      {"reset", "fixed_start"},
      {"horizon", 50},
      {"speed", 0.2},
      {"radius", 0.1},
      {"goal_threshold", 1.5},
      {"start_jitter", 0.1},
      {"max_rotation", 0.25},
  };
  c["repr"] = {
      {"learns_on_BG", false},
      {"learning_rate", 1e-4},
      {"neurons", 256},
      {"hidden_layers", 2},
      {"activation", "silu"},
      {"delta", 0.1},
      {"k_c", 20.0},
      {"beta", 2.0},
      {"alpha_slow", 0.001},
      {"k", 1.0},
      {"d", 3},
      {"n_neg", 10},
  };
  c["oegn"] = {
      {"delta_new", 0.6},
      {"delta_success", nullptr},
      {"delta_age", 600},
      {"delta_error", 600},
      {"delta_prox", nullptr},
      {"delta_count", 5},
      {"n_del", 10},
      {"alpha", 0.001},
      {"alpha_neighbors", 1e-6},
      {"updates_per_batch", 32},
      {"buffer_size", 15000},
      {"init_scale", 0.1},
  };
  c["sampling"] = {
      {"one_plus_alpha_skew", 0.0},
      {"updates_per_step", 0.25},
      {"high_ratio", 0.0},
      {"relabel_strategy", "uniform"},
      {"relabel_fraction", 0.5},
  };
  c["high_level"] = {
      {"alpha_c", 0.05},
      {"neighbors_learning_rate", 0.0},
      {"one_plus_alpha_skew_prime", -1.0},
      {"t_ext", 0.0},
      {"max_tries", 16},
  };
  c["sac"] = {
      {"entropy_scale", 0.2},
      {"hidden_layers", 2},
      {"neurons", 128},
      {"learning_rate", 5e-4},
      {"batch_size", 64},
      {"smooth_update", 0.005},
      {"gamma", 0.99},
      {"activation", "silu"},
  };
  c["loop"] = {
      {"warmup_episodes", 10},
      {"repr_before_oegn", true},
      {"entropy_window", 10000},
  };
  c["run"] = {
      {"agent", "distop"},
      {"max_env_steps", 50000},
      {"log_interval", 1000},
      {"eval_interval", 10000},
      {"eval_episodes", 10},
      {"early_stop_success", 0.0},
      {"checkpoint", true},
      {"loss_records", 100},
  };
  c["repr_study"] = {
      {"transitions", 100000},
      {"train_steps", 6000},
      {"batch_size", 64},
      {"oegn_samples", 20000},
  };
  c["entropy_study"] = {
      {"baseline", true},
  };

  if (profile == "four-rooms") {
    c["oegn"]["buffer_size"] = 200000;
    c["sampling"]["updates_per_step"] = 1.0;
    c["run"]["max_env_steps"] = 40000;
    c["run"]["eval_interval"] = 0;
  } else if (profile == "repr-study") {
    c["env"]["layout"] = "representation_maze";
    c["env"]["observation"] = "one_hot_binary";
    c["env"]["reset"] = "uniform_free";
    c["repr"]["learning_rate"] = 1e-3;
    c["repr_study"]["train_steps"] = 30000;
  } else if (profile == "sparse-maze") {
    c["env"]["kind"] = "point_maze";
    c["env"]["layout"] = "u_maze";
    c["env"]["horizon"] = 200;
    c["env"]["speed"] = 0.5;
    c["repr"]["learns_on_BG"] = true;
    c["repr"]["delta"] = 0.25;
    c["repr"]["k"] = 3.0;
    c["sac"]["gamma"] = 0.996;
    c["high_level"]["t_ext"] = 100.0;
    c["high_level"]["one_plus_alpha_skew_prime"] = -1.0;
    c["oegn"]["buffer_size"] = 400000;
    c["run"]["max_env_steps"] = 300000;
    c["run"]["eval_interval"] = 10000;
    c["run"]["early_stop_success"] = 0.8;
  } else {
    throw ConfigError("profile: unknown profile '" + profile + "' (expected four-rooms, repr-study or sparse-maze)");
  }
  return c;
}

inline std::string join_path(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

inline bool same_kind(const json& def, const json& v) {
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.is_string()) return v.is_string();
  if (def.is_object()) return v.is_object();
  return false;
}

namespace detail {

inline void merge_into(json& base, const json& user, const std::string& prefix) {
  if (!user.is_object()) throw ConfigError(join_path(prefix, "") + ": expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = join_path(prefix, it.key());
    if (!base.contains(it.key())) throw ConfigError(path + ": unknown field");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_into(slot, it.value(), path);
      continue;
    }
    const bool nullable = nullable_keys().count(path) > 0;
    if (it.value().is_null()) {
      if (!nullable) throw ConfigError(path + ": must not be null");
      slot = nullptr;
      continue;
    }
    if (nullable) {
      if (!it.value().is_number()) throw ConfigError(path + ": expected a number or null");
    } else if (!same_kind(slot, it.value())) {
      throw ConfigError(path + ": expected " + std::string(slot.type_name()) + ", got " + it.value().type_name());
    }
    slot = it.value();
  }
}

}  // namespace detail

/// Parses `key.path=value`; the value is read as JSON and otherwise as a string.
inline void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  // Build {a: {b: value}} and merge it so the same checks apply.
  json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  detail::merge_into(cfg, patch, "");
}

/// Defaults of the requested profile overlaid with the user file and overrides.
inline json resolve_config(const json& user, const std::vector<std::string>& overrides = {},
                           const std::string& recipe_override = "") {
  if (!user.is_object()) throw ConfigError("config: expected a JSON object");
  std::string recipe = recipe_override;
  if (recipe.empty()) {
    if (!user.contains("recipe")) throw ConfigError("recipe: missing required field");
    if (!user["recipe"].is_string()) throw ConfigError("recipe: expected string");
    recipe = user["recipe"].get<std::string>();
  }
  if (!user.contains("seed")) throw ConfigError("seed: missing required field");
  std::string profile = default_profile(recipe);
  if (user.contains("profile")) {
    if (!user["profile"].is_string()) throw ConfigError("profile: expected string");
    profile = user["profile"].get<std::string>();
  }
  json cfg = profile_defaults(profile);
  detail::merge_into(cfg, user, "");
  cfg["recipe"] = recipe;
  for (const auto& o : overrides) apply_override(cfg, o);
  if (cfg["seed"].get<long long>() < 0) throw ConfigError("seed: must be non-negative");
  return cfg;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

/// All dotted leaf keys of a resolved configuration.
inline std::vector<std::string> leaf_keys(const json& cfg, const std::string& prefix = "") {
  std::vector<std::string> out;
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    const std::string path = join_path(prefix, it.key());
    if (it.value().is_object()) {
      auto sub = leaf_keys(it.value(), path);
      out.insert(out.end(), sub.begin(), sub.end());
    } else {
      out.push_back(path);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Typed views of a resolved configuration.

struct EnvSpec {
  std::string kind;
  envs::GridMap map;
  envs::GridWorldConfig grid;
  envs::PointMazeConfig maze;

  envs::GridWorld make_gridworld() const { return envs::GridWorld(map, grid); }
  envs::PointMaze make_point_maze() const { return envs::PointMaze(map, maze); }
};

struct RunSpec {
  std::string agent;
  long max_env_steps = 0;
  long log_interval = 0;
  long eval_interval = 0;
  int eval_episodes = 0;
  double early_stop_success = 0.0;
  bool checkpoint = true;
  long loss_records = 0;
};

struct ReprStudySpec {
  long transitions = 0;
  long train_steps = 0;
  int batch_size = 0;
  long oegn_samples = 0;
};

namespace detail {

template <class T>
T get(const json& cfg, const std::string& section, const std::string& key) {
  try {
    return cfg.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(section + "." + key + ": missing or wrong type");
  }
}

inline void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field + ": " + message);
}

inline std::vector<int> layer_sizes(int layers, int neurons) { return std::vector<int>(static_cast<std::size_t>(layers), neurons); }

}  // namespace detail

inline std::string layout_text(const std::string& layout, int room_size) {
  if (layout == "four_rooms") return envs::layouts::four_rooms(room_size);
  if (layout == "open_room") return envs::layouts::open_room(room_size);
  if (layout == "representation_maze") return envs::layouts::representation_maze();
  if (layout == "u_maze") return envs::layouts::u_maze();
  throw ConfigError("env.layout: unknown layout '" + layout + "'");
}

inline EnvSpec env_spec(const json& cfg) {
  using detail::get;
  using detail::require;
  EnvSpec e;
  e.kind = get<std::string>(cfg, "env", "kind");
  require(e.kind == "gridworld" || e.kind == "point_maze", "env.kind", "expected gridworld or point_maze");
  const auto map_file = get<std::string>(cfg, "env", "map_file");
  const int room = get<int>(cfg, "env", "room_size");
  require(room >= 1, "env.room_size", "must be positive");
  try {
    e.map = map_file.empty() ? envs::parse_grid_map(layout_text(get<std::string>(cfg, "env", "layout"), room))
                             : envs::load_grid_map(map_file);
  } catch (const ConfigError& err) {
    throw ConfigError(std::string(map_file.empty() ? "env.layout: " : "env.map_file: ") + err.what());
  }
  e.grid.observation = envs::observation_mode_from_string(get<std::string>(cfg, "env", "observation"));
  e.grid.reset = envs::reset_mode_from_string(get<std::string>(cfg, "env", "reset"));
  e.grid.horizon = get<int>(cfg, "env", "horizon");
  require(e.grid.horizon >= 1, "env.horizon", "must be positive");
  e.maze.horizon = e.grid.horizon;
  e.maze.speed = get<double>(cfg, "env", "speed");
  e.maze.radius = get<double>(cfg, "env", "radius");
  e.maze.goal_threshold = get<double>(cfg, "env", "goal_threshold");
  e.maze.start_jitter = get<double>(cfg, "env", "start_jitter");
  e.maze.max_rotation = get<double>(cfg, "env", "max_rotation");
  // Surface constructor checks with the section name.
  try {
    if (e.kind == "gridworld") {
      (void)e.make_gridworld();
    } else {
      (void)e.make_point_maze();
    }
  } catch (const ConfigError& err) {
    throw ConfigError(std::string("env: ") + err.what());
  }
  return e;
}

inline loop::SystemConfig system_config(const json& cfg) {
  using detail::get;
  using detail::require;
  loop::SystemConfig s;
  s.seed = cfg.at("seed").get<std::uint64_t>();

  const int repr_layers = get<int>(cfg, "repr", "hidden_layers");
  const int repr_neurons = get<int>(cfg, "repr", "neurons");
  require(repr_layers >= 0, "repr.hidden_layers", "must be non-negative");
  require(repr_neurons >= 1, "repr.neurons", "must be positive");
  s.encoder.hidden = detail::layer_sizes(repr_layers, repr_neurons);
  s.encoder.embedding_dim = get<int>(cfg, "repr", "d");
  require(s.encoder.embedding_dim >= 1, "repr.d", "must be positive");
  s.encoder.activation = nn::activation_from_string(get<std::string>(cfg, "repr", "activation"));
  s.contrastive.k = get<double>(cfg, "repr", "k");
  s.contrastive.k_c = get<double>(cfg, "repr", "k_c");
  s.contrastive.delta = get<double>(cfg, "repr", "delta");
  s.contrastive.beta = get<double>(cfg, "repr", "beta");
  s.contrastive.alpha_slow = get<double>(cfg, "repr", "alpha_slow");
  s.contrastive.n_neg = get<int>(cfg, "repr", "n_neg");
  s.repr_learning_rate = get<double>(cfg, "repr", "learning_rate");
  s.loop.learns_on_BG = get<bool>(cfg, "repr", "learns_on_BG");

  const json& o = cfg.at("oegn");
  s.oegn.delta_new = get<double>(cfg, "oegn", "delta_new");
  s.oegn.delta_success = o.at("delta_success").is_null() ? kInf : o.at("delta_success").get<double>();
  if (!o.at("delta_prox").is_null()) s.oegn.delta_prox = o.at("delta_prox").get<double>();
  s.oegn.delta_age = get<int>(cfg, "oegn", "delta_age");
  s.oegn.delta_error = get<int>(cfg, "oegn", "delta_error");
  s.oegn.delta_count = get<int>(cfg, "oegn", "delta_count");
  s.oegn.n_del = get<int>(cfg, "oegn", "n_del");
  s.oegn.alpha = get<double>(cfg, "oegn", "alpha");
  s.oegn.alpha_neighbors = get<double>(cfg, "oegn", "alpha_neighbors");
  s.oegn.updates_per_batch = get<int>(cfg, "oegn", "updates_per_batch");
  const long long buffer = get<long long>(cfg, "oegn", "buffer_size");
  require(buffer >= 1, "oegn.buffer_size", "must be positive");
  s.oegn.buffer_size = static_cast<std::size_t>(buffer);
  s.oegn.init_scale = get<double>(cfg, "oegn", "init_scale");
  require(s.oegn.init_scale > 0.0, "oegn.init_scale", "must be positive");

  s.mix.skew_exponent = get<double>(cfg, "sampling", "one_plus_alpha_skew");
  s.mix.high_ratio = get<double>(cfg, "sampling", "high_ratio");
  s.loop.updates_per_step = get<double>(cfg, "sampling", "updates_per_step");
  try {
    s.relabel.strategy = store::relabel_strategy_from_string(get<std::string>(cfg, "sampling", "relabel_strategy"));
  } catch (const ConfigError& err) {
    throw ConfigError(std::string("sampling.relabel_strategy: ") + err.what());
  }
  s.relabel.fraction = get<double>(cfg, "sampling", "relabel_fraction");
  s.relabel.skew_exponent = s.mix.skew_exponent;

  s.selector.alpha_c = get<double>(cfg, "high_level", "alpha_c");
  require(s.selector.alpha_c > 0.0, "high_level.alpha_c", "must be positive");
  const double nb = get<double>(cfg, "high_level", "neighbors_learning_rate");
  require(nb >= 0.0, "high_level.neighbors_learning_rate", "must be non-negative");
  s.selector.neighbor_rate = nb / s.selector.alpha_c;
  s.selector.alpha_skew_prime_plus1 = get<double>(cfg, "high_level", "one_plus_alpha_skew_prime");
  s.selector.t_ext = get<double>(cfg, "high_level", "t_ext");
  s.selector.max_tries = get<int>(cfg, "high_level", "max_tries");

  const int sac_layers = get<int>(cfg, "sac", "hidden_layers");
  const int sac_neurons = get<int>(cfg, "sac", "neurons");
  require(sac_layers >= 0, "sac.hidden_layers", "must be non-negative");
  require(sac_neurons >= 1, "sac.neurons", "must be positive");
  s.sac.hidden = detail::layer_sizes(sac_layers, sac_neurons);
  s.sac.activation = nn::activation_from_string(get<std::string>(cfg, "sac", "activation"));
  s.sac.entropy_scale = get<double>(cfg, "sac", "entropy_scale");
  s.sac.learning_rate = get<double>(cfg, "sac", "learning_rate");
  s.sac.tau = get<double>(cfg, "sac", "smooth_update");
  s.sac.gamma = get<double>(cfg, "sac", "gamma");
  s.loop.batch_size = get<int>(cfg, "sac", "batch_size");

  s.loop.warmup_episodes = get<int>(cfg, "loop", "warmup_episodes");
  s.loop.repr_before_oegn = get<bool>(cfg, "loop", "repr_before_oegn");
  s.loop.entropy_window = get<int>(cfg, "loop", "entropy_window");

  s.validate();
  return s;
}

inline RunSpec run_spec(const json& cfg) {
  using detail::get;
  using detail::require;
  RunSpec r;
  r.agent = get<std::string>(cfg, "run", "agent");
  require(r.agent == "distop" || r.agent == "flat", "run.agent", "expected distop or flat");
  r.max_env_steps = get<long>(cfg, "run", "max_env_steps");
  require(r.max_env_steps >= 0, "run.max_env_steps", "must be non-negative");
  r.log_interval = get<long>(cfg, "run", "log_interval");
  require(r.log_interval >= 1, "run.log_interval", "must be positive");
  r.eval_interval = get<long>(cfg, "run", "eval_interval");
  require(r.eval_interval >= 0, "run.eval_interval", "must be non-negative");
  r.eval_episodes = get<int>(cfg, "run", "eval_episodes");
  require(r.eval_episodes >= 1, "run.eval_episodes", "must be positive");
  r.early_stop_success = get<double>(cfg, "run", "early_stop_success");
  r.checkpoint = get<bool>(cfg, "run", "checkpoint");
  r.loss_records = get<long>(cfg, "run", "loss_records");
  require(r.loss_records >= 0, "run.loss_records", "must be non-negative");
  return r;
}

inline ReprStudySpec repr_study_spec(const json& cfg) {
  using detail::get;
  using detail::require;
  ReprStudySpec r;
  r.transitions = get<long>(cfg, "repr_study", "transitions");
  r.train_steps = get<long>(cfg, "repr_study", "train_steps");
  r.batch_size = get<int>(cfg, "repr_study", "batch_size");
  r.oegn_samples = get<long>(cfg, "repr_study", "oegn_samples");
  require(r.transitions >= 2, "repr_study.transitions", "must be at least 2");
  require(r.train_steps >= 0, "repr_study.train_steps", "must be non-negative");
  require(r.batch_size >= 2, "repr_study.batch_size", "must be at least 2");
  require(r.oegn_samples >= 0, "repr_study.oegn_samples", "must be non-negative");
  return r;
}

/// Validates every typed view of the resolved config; throws ConfigError naming the field.
inline void validate_config(const json& cfg) {
  (void)env_spec(cfg);
  (void)system_config(cfg);
  (void)run_spec(cfg);
  (void)repr_study_spec(cfg);
}

}  // namespace distop::harness
