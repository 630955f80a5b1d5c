#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "distop/envs/random_walk.hpp"
#include "distop/harness/config.hpp"
#include "distop/harness/export.hpp"
#include "distop/harness/metrics.hpp"
#include "distop/loop/system.hpp"
#include "distop/oracles/oracles.hpp"

namespace distop::harness {

/// Where a recipe writes its artefacts. An empty directory disables file output.
struct RunOutput {
  std::string dir;
  MetricsWriter* metrics = nullptr;

  bool has_dir() const { return !dir.empty(); }
  std::string path(const std::string& name) const { return (std::filesystem::path(dir) / name).string(); }
  void write(const json& record) const {
    if (metrics) metrics->write(record);
  }
};

inline json loss_record(const loop::LossReport& r) {
  json phases = json::array();
  for (const auto& [name, seq] : r.phases) phases.push_back({{"phase", name}, {"seq", seq}});
  return {{"kind", "loss"},
          {"learning_step", r.step},
          {"phases", phases},
          {"batch", r.batch},
          {"repr_pairs", r.repr_pairs},
          {"repr_loss", r.repr_loss},
          {"repr_attraction", r.repr_attraction},
          {"repr_repulsion", r.repr_repulsion},
          {"repr_consistency", r.repr_consistency},
          {"oegn_updates", r.oegn_updates},
          {"created", r.created},
          {"deleted", r.deleted},
          {"nodes", r.nodes},
          {"edges", r.edges},
          {"relabeled", r.relabeled},
          {"mean_intrinsic", r.mean_intrinsic},
          {"critic1_loss", r.agent.critic1},
          {"critic2_loss", r.agent.critic2},
          {"actor_loss", r.agent.actor},
          {"mean_q_target", r.agent.mean_q},
          {"policy_entropy", r.agent.entropy}};
}

template <class System>
json interval_record(const System& sys, double mean_return) {
  const auto& g = sys.graph();
  return {{"kind", "interval"},
          {"env_steps", sys.env_steps()},
          {"episodes", sys.episodes()},
          {"learning_steps", sys.learning_steps()},
          {"entropy", visitation_entropy(sys.visits().histogram())},
          {"entropy_window", sys.visits().size()},
          {"nodes", g.size()},
          {"edges", g.edges().size()},
          {"created_total", g.created_total()},
          {"deleted_total", g.deleted_total()},
          {"evicted_total", g.evicted_total()},
          {"stored", store::stored_transitions(g)},
          {"episode_return", mean_return}};
}

inline json evaluation_record(long env_steps, const loop::Evaluation& ev) {
  return {{"kind", "evaluation"},
          {"env_steps", env_steps},
          {"episodes", ev.episodes},
          {"success_rate", ev.success_rate()},
          {"final_distance", ev.mean_final_distance},
          {"min_distance", ev.mean_min_distance}};
}

// ---------------------------------------------------------------------------
// Growing network fed with a stream of embedded transitions.

struct StreamStats {
  long samples = 0;
  long violations = 0;          // invariant violations summed over steps
  long steps_with_violation = 0;
  std::vector<std::string> first_violations;
};

/// Feeds pairs (prev_i, next_i) in episodes of `episode_len` samples. Each
/// episode first selects a uniformly drawn node (as goal selection would) and
/// uses it as origin and its reference vector as the goal.
inline StreamStats stream_oegn(topology::TopologyGraph& graph, const Mat& prev, const Mat& next, int episode_len, Rng& rng,
                               bool check_invariants) {
  StreamStats st;
  NodeId origin = kNoNode;
  EmbeddedState goal;
  for (Eigen::Index i = 0; i < next.cols(); ++i) {
    if (i % episode_len == 0 || !graph.contains(origin)) {
      auto& node = graph.nodes()[uniform_index(rng, graph.size())];
      ++node.selection_count;
      origin = node.id;
      goal = node.w;
    }
    topology::OegnSample s{next.col(i), prev.col(i), goal, origin};
    topology::oegn_step(graph, s);
    ++st.samples;
    if (check_invariants) {
      const auto v = graph.check_invariants();
      if (!v.empty()) {
        ++st.steps_with_violation;
        st.violations += static_cast<long>(v.size());
        if (st.first_violations.empty()) st.first_violations = v;
      }
    }
  }
  return st;
}

/// Fraction of columns within `radius` of their nearest node.
inline double coverage(const topology::TopologyGraph& graph, const Mat& points, double radius) {
  long inside = 0;
  for (Eigen::Index i = 0; i < points.cols(); ++i) inside += graph.nearest(points.col(i)).distance <= radius ? 1 : 0;
  return points.cols() ? static_cast<double>(inside) / static_cast<double>(points.cols()) : 1.0;
}

// ---------------------------------------------------------------------------
// repr-study: contrastive training on random-walk transitions of a one-hot gridworld.

struct ReprStudyResult {
  TopologyScore initial;
  TopologyScore final;
  double final_loss = 0.0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
};

inline ReprStudyResult run_repr_study(const json& cfg, const RunOutput& out) {
  const EnvSpec es = env_spec(cfg);
  if (es.kind != "gridworld") throw ConfigError("env.kind: repr-study needs a gridworld");
  loop::SystemConfig sc = system_config(cfg);
  const ReprStudySpec rs = repr_study_spec(cfg);
  const RunSpec run = run_spec(cfg);
  if (sc.contrastive.n_neg > rs.batch_size - 1) throw ConfigError("repr.n_neg must be smaller than repr_study.batch_size");

  envs::GridWorld env = es.make_gridworld();
  Rng rng(sc.seed);

  // Random-walk transitions stored as free-cell index pairs.
  std::vector<std::pair<int, int>> data;
  data.reserve(static_cast<std::size_t>(rs.transitions));
  while (static_cast<long>(data.size()) < rs.transitions) {
    env.reset(rng);
    bool done = false;
    while (!done && static_cast<long>(data.size()) < rs.transitions) {
      const int from = env.free_index(env.agent());
      done = env.step(env.random_action(rng)).done;
      data.emplace_back(from, env.free_index(env.agent()));
    }
  }
  const auto& cells = env.free_cells();
  auto obs = [&](int free_index) { return env.observation_of(cells[static_cast<std::size_t>(free_index)]); };

  sc.encoder.input_dim = env.encoder_input_dim();
  repr::EncoderParams enc = repr::make_encoder(sc.encoder, rng);
  nn::Adam opt(enc.online, nn::AdamConfig{sc.repr_learning_rate});

  ReprStudyResult result;
  result.initial = score_topology(env, enc, false);
  const int in = enc.input_dim();
  for (long step = 0; step < rs.train_steps; ++step) {
    repr::ContrastiveBatch b;
    b.states = Mat::Zero(in, rs.batch_size);
    b.next_states = Mat::Zero(in, rs.batch_size);
    for (int i = 0; i < rs.batch_size; ++i) {
      const auto& [s, s2] = data[uniform_index(rng, data.size())];
      b.states.col(i) = repr::encoder_input(enc, obs(s));
      b.next_states.col(i) = repr::encoder_input(enc, obs(s2));
    }
    b.negatives = repr::sample_negatives(rng, rs.batch_size, sc.contrastive.n_neg);
    auto loss = repr::distop_loss(enc, sc.contrastive, b);
    policy::require_finite(loss.loss, "representation loss");
    opt.step(enc.online, loss.grads);
    repr::smooth_update_target(enc, sc.contrastive.alpha_slow);
    result.final_loss = loss.loss;
    if ((step + 1) % run.log_interval == 0 || step + 1 == rs.train_steps) {
      const TopologyScore s = score_topology(env, enc, false);
      out.write({{"kind", "repr"},
                 {"train_step", step + 1},
                 {"loss", loss.loss},
                 {"attraction", loss.attraction},
                 {"repulsion", loss.repulsion},
                 {"consistency", loss.consistency},
                 {"spearman", s.spearman},
                 {"mean_adjacent", s.mean_adjacent},
                 {"mean_far", s.mean_far},
                 {"far_over_adjacent", s.far_over_adjacent}});
    }
  }
  result.final = score_topology(env, enc, false);

  // Growing network over the learnt embedding of the same transitions.
  topology::TopologyGraph graph = topology::TopologyGraph::initialized(sc.oegn, sc.encoder.embedding_dim, rng);
  if (rs.oegn_samples > 0) {
    Mat all(in, static_cast<Eigen::Index>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) all.col(static_cast<Eigen::Index>(i)) = repr::encoder_input(enc, obs(static_cast<int>(i)));
    const Mat emb = repr::encode_batch(enc, all, false);
    Mat prev(sc.encoder.embedding_dim, rs.oegn_samples), next(sc.encoder.embedding_dim, rs.oegn_samples);
    for (long i = 0; i < rs.oegn_samples; ++i) {
      const auto& [s, s2] = data[uniform_index(rng, data.size())];
      prev.col(i) = emb.col(s);
      next.col(i) = emb.col(s2);
    }
    stream_oegn(graph, prev, next, env.horizon(), rng, false);
  }
  result.nodes = graph.size();
  result.edges = graph.edges().size();
  out.write({{"kind", "summary"},
             {"spearman", result.final.spearman},
             {"far_over_adjacent", result.final.far_over_adjacent},
             {"initial_spearman", result.initial.spearman},
             {"nodes", result.nodes},
             {"edges", result.edges}});
  if (out.has_dir()) {
    export_topology_snapshot(out.path("topology.txt"), graph, enc, env, false);
    if (run.checkpoint) nn::write_checkpoint(out.path("checkpoint.bin"), repr::to_checkpoint(enc, cfg.at("repr")));
  }
  return result;
}

// ---------------------------------------------------------------------------
// entropy-study: state-visitation entropy of the full agent against a random walk.

struct EntropyStudyResult {
  double distop_entropy = 0.0;
  double baseline_entropy = 0.0;
  double ratio = 0.0;
  long env_steps = 0;
  std::size_t nodes = 0;
};

template <class System>
void attach_loss_records(System& sys, const RunOutput& out, long limit) {
  sys.on_learning_step([&out, limit](const loop::LossReport& r) {
    if (r.step < limit) out.write(loss_record(r));
  });
}

inline EntropyStudyResult run_entropy_study(const json& cfg, const RunOutput& out) {
  const EnvSpec es = env_spec(cfg);
  if (es.kind != "gridworld") throw ConfigError("env.kind: entropy-study needs a gridworld");
  const loop::SystemConfig sc = system_config(cfg);
  const RunSpec run = run_spec(cfg);

  loop::DistopSystem<envs::GridWorld, policy::DiscreteSac> sys(es.make_gridworld(), sc);
  if (out.has_dir()) sys.set_abort_checkpoint(out.path("abort_checkpoint.bin"));
  attach_loss_records(sys, out, run.loss_records);
  long next_log = run.log_interval;
  double ret_sum = 0.0;
  long ret_n = 0;
  while (sys.env_steps() < run.max_env_steps) {
    ret_sum += sys.run_episode().ext_return;
    ++ret_n;
    if (sys.env_steps() >= next_log) {
      out.write(interval_record(sys, ret_sum / static_cast<double>(ret_n)));
      ret_sum = 0.0;
      ret_n = 0;
      while (next_log <= sys.env_steps()) next_log += run.log_interval;
    }
  }

  EntropyStudyResult r;
  r.env_steps = sys.env_steps();
  r.nodes = sys.graph().size();
  r.distop_entropy = visitation_entropy(sys.visits().histogram());
  if (cfg.at("entropy_study").at("baseline").get<bool>()) {
    envs::GridWorld base = es.make_gridworld();
    const int episodes = std::max(1, static_cast<int>(sys.visits().size()) / base.horizon());
    r.baseline_entropy = visitation_entropy(envs::random_walk_rollout(base, episodes, sc.seed + 7919));
    r.ratio = r.baseline_entropy > 0.0 ? r.distop_entropy / r.baseline_entropy : 0.0;
  }
  out.write({{"kind", "summary"},
             {"env_steps", r.env_steps},
             {"entropy", r.distop_entropy},
             {"baseline_entropy", r.baseline_entropy},
             {"ratio", r.ratio},
             {"nodes", r.nodes}});
  if (out.has_dir()) {
    export_topology_snapshot(out.path("topology.txt"), sys.graph(), sys.encoder(), sys.env());
    if (run.checkpoint) nn::write_checkpoint(out.path("checkpoint.bin"), sys.checkpoint());
  }
  return r;
}

// ---------------------------------------------------------------------------
// sparse-maze: greedy goal reaching on the U-maze, full agent or flat baseline.

struct MazeResult {
  std::string agent;
  double best_success = 0.0;
  double last_success = 0.0;
  long reached_at = -1;  // env steps of the first evaluation meeting early_stop_success
  long env_steps = 0;
  std::vector<loop::Evaluation> evaluations;
};

namespace detail {

template <class System>
MazeResult drive_maze(System& sys, const EnvSpec& es, const RunSpec& run, std::uint64_t seed, const RunOutput& out,
                      bool interval_records) {
  MazeResult r;
  long next_eval = run.eval_interval > 0 ? run.eval_interval : run.max_env_steps;
  long next_log = run.log_interval;
  long evals = 0;
  double ret_sum = 0.0;
  long ret_n = 0;
  while (sys.env_steps() < run.max_env_steps) {
    if constexpr (requires { sys.run_episode().ext_return; }) {
      ret_sum += sys.run_episode().ext_return;
    } else {
      ret_sum += sys.run_episode();
    }
    ++ret_n;
    if (sys.env_steps() >= next_log) {
      if (interval_records) {
        if constexpr (requires { sys.graph(); }) out.write(interval_record(sys, ret_sum / static_cast<double>(ret_n)));
      } else {
        out.write({{"kind", "interval"},
                   {"env_steps", sys.env_steps()},
                   {"learning_steps", sys.learning_steps()},
                   {"episode_return", ret_sum / static_cast<double>(ret_n)}});
      }
      ret_sum = 0.0;
      ret_n = 0;
      while (next_log <= sys.env_steps()) next_log += run.log_interval;
    }
    const bool last = sys.env_steps() >= run.max_env_steps;
    if (sys.env_steps() >= next_eval || last) {
      const auto ev = sys.evaluate(run.eval_episodes, seed * 1000003ULL + static_cast<std::uint64_t>(evals++), es.make_point_maze());
      r.evaluations.push_back(ev);
      out.write(evaluation_record(sys.env_steps(), ev));
      r.best_success = std::max(r.best_success, ev.success_rate());
      r.last_success = ev.success_rate();
      while (next_eval <= sys.env_steps()) next_eval += std::max<long>(1, run.eval_interval);
      if (run.early_stop_success > 0.0 && ev.success_rate() >= run.early_stop_success) {
        r.reached_at = sys.env_steps();
        break;
      }
    }
  }
  r.env_steps = sys.env_steps();
  return r;
}

}  // namespace detail

inline MazeResult run_sparse_maze(const json& cfg, const RunOutput& out) {
  const EnvSpec es = env_spec(cfg);
  if (es.kind != "point_maze") throw ConfigError("env.kind: sparse-maze needs a point_maze");
  const loop::SystemConfig sc = system_config(cfg);
  const RunSpec run = run_spec(cfg);
  MazeResult r;
  if (run.agent == "distop") {
    loop::DistopSystem<envs::PointMaze, policy::ContinuousSac> sys(es.make_point_maze(), sc);
    if (out.has_dir()) sys.set_abort_checkpoint(out.path("abort_checkpoint.bin"));
    attach_loss_records(sys, out, run.loss_records);
    r = detail::drive_maze(sys, es, run, sc.seed, out, true);
    if (out.has_dir() && run.checkpoint) nn::write_checkpoint(out.path("checkpoint.bin"), sys.checkpoint());
    if (out.has_dir()) export_topology_snapshot(out.path("topology.txt"), sys.graph());
  } else {
    using Flat = loop::FlatSystem<envs::PointMaze, policy::ContinuousSac>;
    Flat::Config fc;
    fc.sac = sc.sac;
    fc.updates_per_step = sc.loop.updates_per_step;
    fc.batch_size = sc.loop.batch_size;
    fc.buffer_size = sc.oegn.buffer_size;
    fc.warmup_episodes = sc.loop.warmup_episodes;
    fc.seed = sc.seed;
    Flat sys(es.make_point_maze(), fc);
    r = detail::drive_maze(sys, es, run, sc.seed, out, false);
    if (out.has_dir() && run.checkpoint) nn::write_checkpoint(out.path("checkpoint.bin"), sys.agent().to_checkpoint());
  }
  r.agent = run.agent;
  out.write({{"kind", "summary"},
             {"agent", r.agent},
             {"env_steps", r.env_steps},
             {"best_success", r.best_success},
             {"last_success", r.last_success},
             {"reached_at", r.reached_at}});
  return r;
}

// ---------------------------------------------------------------------------
// unit-oracles: gradient and bound checks against the scalar reference code.

struct OracleReport {
  double max_loss_gradient_error = 0.0;
  double max_critic_gradient_error = 0.0;
  long bound_violations = 0;
  bool passed = false;
};

inline OracleReport run_unit_oracles(const json& cfg, const RunOutput& out) {
  const loop::SystemConfig sc = system_config(cfg);
  Rng rng(sc.seed);
  OracleReport rep;
  for (int trial = 0; trial < 5; ++trial) {
    repr::EncoderArchitecture arch{4, 3, {6, 5}, nn::Activation::kTanh, 1.0};
    repr::EncoderParams enc = repr::make_encoder(arch, rng);
    enc.target = nn::Mlp({4, 6, 5, 3}, nn::Activation::kTanh, rng);
    repr::ContrastiveConfig cc = sc.contrastive;
    cc.delta = 0.05;
    repr::ContrastiveBatch b;
    b.states = oracles::random_matrix(rng, 4, 8);
    b.next_states = oracles::random_matrix(rng, 4, 8);
    b.negatives = repr::sample_negatives(rng, 8, 4);
    const auto analytic = oracles::flatten(repr::distop_loss(enc, cc, b).grads);
    const auto numeric = oracles::finite_difference_gradient(enc.online, [&] { return oracles::reference_contrastive_loss(enc, cc, b); });
    rep.max_loss_gradient_error = std::max(rep.max_loss_gradient_error, oracles::max_relative_error(analytic, numeric));

    const auto bc = repr::infonce_bound_check(enc, b, cc.k);
    for (std::size_t i = 0; i < bc.lhs_terms.size(); ++i) rep.bound_violations += bc.rhs_terms[i] > bc.lhs_terms[i] ? 1 : 0;

    policy::SacConfig pc;
    pc.hidden = {6, 6};
    pc.activation = nn::Activation::kTanh;
    Vec lo = Vec::Constant(2, -1.0), hi = Vec::Constant(2, 1.0);
    policy::ContinuousSac agent(3, 2, lo, hi, pc, rng);
    policy::AgentBatch ab;
    ab.states = oracles::random_matrix(rng, 3, 6);
    ab.goals = oracles::random_matrix(rng, 2, 6);
    ab.actions = oracles::random_matrix(rng, 2, 6);
    ab.next_states = oracles::random_matrix(rng, 3, 6);
    ab.rewards = Vec(oracles::random_matrix(rng, 6, 1));
    ab.terminal = Vec::Zero(6);
    const Vec y = agent.critic_targets(ab, rng);
    auto g = agent.critic(0).zero_gradients();
    agent.critic_loss(0, ab, y, &g);
    const Mat qin = policy::AgentBatch::stack(ab.inputs(), ab.actions);
    const std::vector<int> rows(6, 0);
    const auto num = oracles::finite_difference_gradient(agent.critic(0), [&] { return oracles::reference_critic_loss(agent.critic(0), qin, rows, y); });
    rep.max_critic_gradient_error = std::max(rep.max_critic_gradient_error, oracles::max_relative_error(oracles::flatten(g), num));
  }
  rep.passed = rep.max_loss_gradient_error < 1e-4 && rep.max_critic_gradient_error < 1e-4 && rep.bound_violations == 0;
  out.write({{"kind", "oracles"},
             {"max_loss_gradient_error", rep.max_loss_gradient_error},
             {"max_critic_gradient_error", rep.max_critic_gradient_error},
             {"bound_violations", rep.bound_violations},
             {"passed", rep.passed}});
  return rep;
}

}  // namespace distop::harness
