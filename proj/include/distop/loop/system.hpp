#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "distop/nn/adam.hpp"
#include "distop/nn/checkpoint.hpp"
#include "distop/policy/sac_continuous.hpp"
#include "distop/policy/sac_discrete.hpp"
#include "distop/repr/contrastive.hpp"
#include "distop/repr/encoder.hpp"
#include "distop/selector/selector.hpp"
#include "distop/store/sampling.hpp"
#include "distop/topology/oegn.hpp"

namespace distop::loop {

struct LoopConfig {
  /// Episodes with uniform-random actions and no goal before skills are used.
  int warmup_episodes = 10;
  /// Learning steps per environment step (0.25 means one every four steps).
  double updates_per_step = 0.25;
  int batch_size = 64;
  /// The contrastive loss also trains on pairs drawn from B^G.
  bool learns_on_BG = true;
  /// Representation step before the OEGN updates (the alternative is the reverse order).
  bool repr_before_oegn = true;
  /// Window of recent steps for the visitation entropy.
  int entropy_window = 10000;

  void validate() const {
    if (warmup_episodes < 0) throw ConfigError("loop.warmup_episodes must be non-negative");
    if (!(updates_per_step >= 0.0)) throw ConfigError("loop.updates_per_step must be non-negative");
    if (batch_size < 2) throw ConfigError("loop.batch_size must be at least 2");
    if (entropy_window < 1) throw ConfigError("loop.entropy_window must be positive");
  }
};

struct SystemConfig {
  repr::EncoderArchitecture encoder;
  repr::ContrastiveConfig contrastive;
  double repr_learning_rate = 1e-4;
  topology::OegnConfig oegn;
  store::LearningMixConfig mix;
  store::RelabelConfig relabel;
  selector::SelectorConfig selector;
  policy::SacConfig sac;
  LoopConfig loop;
  std::uint64_t seed = 0;

  void validate() const {
    contrastive.validate();
    oegn.validate();
    selector.validate();
    sac.validate();
    loop.validate();
    if (!(repr_learning_rate > 0.0)) throw ConfigError("repr.learning_rate must be positive");
    if (contrastive.n_neg > loop.batch_size - 1) throw ConfigError("repr.n_neg must be smaller than loop.batch_size");
    if (!(mix.high_ratio >= 0.0 && mix.high_ratio <= 1.0)) throw ConfigError("sampling.high_ratio must lie in [0, 1]");
    if (!(relabel.fraction >= 0.0 && relabel.fraction <= 1.0)) throw ConfigError("relabel.fraction must lie in [0, 1]");
  }
};

struct EpisodeReport {
  long episode = 0;
  bool warmup = false;
  NodeId goal_node = kNoNode;
  bool goal_fell_back = false;
  int steps = 0;
  double ext_return = 0.0;
  double mean_ext_reward = 0.0;
  double final_intrinsic = 0.0;
  int learning_steps = 0;
  bool value_updated = false;
};

struct LossReport {
  long step = 0;
  /// Phase names paired with a global sequence number, in execution order.
  std::vector<std::pair<std::string, long>> phases;
  int batch = 0;
  int repr_pairs = 0;
  double repr_loss = 0.0;
  double repr_attraction = 0.0;
  double repr_repulsion = 0.0;
  double repr_consistency = 0.0;
  int oegn_updates = 0;
  int created = 0;
  int deleted = 0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  long relabeled = 0;
  double mean_intrinsic = 0.0;
  policy::AgentLosses agent;
};

/// Greedy evaluation episodes towards a fixed target.
struct Evaluation {
  int episodes = 0;
  int successes = 0;
  double mean_final_distance = 0.0;
  double mean_min_distance = 0.0;
  double success_rate() const { return episodes > 0 ? static_cast<double>(successes) / episodes : 0.0; }
};

template <class Agent, class Env>
Agent make_agent(const Env& env, int goal_dim, const policy::SacConfig& cfg, Rng& rng) {
  if constexpr (std::is_same_v<Agent, policy::DiscreteSac>) {
    return policy::DiscreteSac(env.observation_dim(), goal_dim, env.num_actions(), cfg, rng);
  } else {
    return policy::ContinuousSac(env.observation_dim(), goal_dim, env.action_low(), env.action_high(), cfg, rng);
  }
}

/// Rolling visitation statistics over the most recent `window` steps.
class VisitationWindow {
 public:
  VisitationWindow(int num_cells, int window) : hist_(static_cast<std::size_t>(num_cells), 0), window_(window) {}

  void add(int cell) {
    recent_.push_back(cell);
    ++hist_[static_cast<std::size_t>(cell)];
    if (static_cast<int>(recent_.size()) > window_) {
      --hist_[static_cast<std::size_t>(recent_.front())];
      recent_.pop_front();
    }
  }
  const std::vector<long>& histogram() const { return hist_; }
  std::size_t size() const { return recent_.size(); }

 private:
  std::vector<long> hist_;
  std::deque<int> recent_;
  int window_;
};

/// Full agent: encoder, growing network with per-cluster buffers, high-level
/// selector and goal-conditioned policy, driven episode by episode.
template <class Env, class Agent>
class DistopSystem {
 public:
  DistopSystem(Env env, SystemConfig cfg)
      : cfg_(std::move(cfg)), env_(std::move(env)), rng_(cfg_.seed),
        visits_(env_.num_cells(), cfg_.loop.entropy_window) {
    cfg_.validate();
    cfg_.encoder.input_dim = env_.encoder_input_dim();
    encoder_ = repr::make_encoder(cfg_.encoder, rng_);
    encoder_opt_ = nn::Adam(encoder_.online, nn::AdamConfig{cfg_.repr_learning_rate});
    graph_ = topology::TopologyGraph::initialized(cfg_.oegn, cfg_.encoder.embedding_dim, rng_);
    agent_ = make_agent<Agent>(env_, cfg_.encoder.embedding_dim, cfg_.sac, rng_);
  }

  const SystemConfig& config() const { return cfg_; }
  Env& env() { return env_; }
  const Env& env() const { return env_; }
  Agent& agent() { return agent_; }
  const Agent& agent() const { return agent_; }
  repr::EncoderParams& encoder() { return encoder_; }
  const repr::EncoderParams& encoder() const { return encoder_; }
  topology::TopologyGraph& graph() { return graph_; }
  const topology::TopologyGraph& graph() const { return graph_; }
  Rng& rng() { return rng_; }

  long env_steps() const { return env_steps_; }
  long episodes() const { return episodes_; }
  long learning_steps() const { return learning_steps_; }
  long generated_transitions() const { return generated_; }
  long routed_transitions() const { return routed_; }
  const VisitationWindow& visits() const { return visits_; }
  bool in_warmup() const { return episodes_ < cfg_.loop.warmup_episodes; }

  /// Called after every learning step.
  void on_learning_step(std::function<void(const LossReport&)> cb) { loss_cb_ = std::move(cb); }

  /// One episode with a goal fixed at the start (none during warmup).
  EpisodeReport run_episode() {
    EpisodeReport rep;
    rep.episode = episodes_;
    rep.warmup = in_warmup();

    GroundState goal_state;
    EmbeddedState goal_embedding;
    if (!rep.warmup) {
      const auto hl = selector::high_level_distribution(graph_, cfg_.selector);
      for (int attempt = 0; attempt < 16 && goal_embedding.size() == 0; ++attempt) {
        const NodeId id = graph_.nodes()[sample_categorical(rng_, hl.probs)].id;
        if (auto gs = selector::sample_goal_state(graph_, id, encoder_, cfg_.selector.max_tries, rng_)) {
          goal_state = std::move(gs->goal_state);
          goal_embedding = std::move(gs->goal_embedding);
          rep.goal_node = gs->node;
          rep.goal_fell_back = gs->fell_back;
        }
      }
      if (goal_embedding.size() == 0) throw InvalidState("no cluster could provide a goal-state");
    }

    GroundState obs = env_.reset(rng_);
    bool done = false;
    while (!done) {
      const Vec action = rep.warmup ? env_.random_action(rng_) : agent_.act(obs, goal_embedding, false, rng_);
      auto step = env_.step(action);
      auto t = std::make_shared<store::Transition>();
      t->state = obs;
      t->action = action;
      t->next_state = step.observation;
      t->goal_state = goal_state;
      t->ext_reward = step.reward;
      t->done = step.terminal;
      t->episode_id = episodes_;
      t->step_index = rep.steps;
      t->goal_node = rep.goal_node;
      ++generated_;
      store::route_transition(graph_, encoder_, t);
      ++routed_;
      visits_.add(env_.cell_index());

      rep.ext_return += step.reward;
      ++rep.steps;
      ++env_steps_;
      obs = std::move(step.observation);
      done = step.done || step.terminal;

      update_credit_ += cfg_.loop.updates_per_step;
      while (update_credit_ >= 1.0) {
        update_credit_ -= 1.0;
        if (store::stored_transitions(graph_) < static_cast<std::size_t>(cfg_.loop.batch_size)) continue;
        learning_step();
        ++rep.learning_steps;
      }
    }
    rep.mean_ext_reward = rep.steps > 0 ? rep.ext_return / rep.steps : 0.0;
    if (!rep.warmup) {
      rep.final_intrinsic = policy::intrinsic_reward(encoder_, obs, goal_embedding);
      // The goal's cluster may have been deleted during the episode.
      if (graph_.contains(rep.goal_node)) {
        selector::update_cluster_value(graph_, rep.goal_node, rep.mean_ext_reward, cfg_.selector);
        rep.value_updated = true;
      }
    }
    ++episodes_;
    return rep;
  }

  /// One interleaved update of the representation, the growing network and the agent.
  LossReport learning_step() {
    LossReport rep;
    rep.step = learning_steps_;
    const auto hl = selector::high_level_distribution(graph_, cfg_.selector);
    auto batch = store::sample_learning_batch(graph_, static_cast<std::size_t>(cfg_.loop.batch_size), cfg_.mix, &hl.probs, rng_);
    rep.relabeled = store::relabel(batch, cfg_.relabel, graph_, &hl.probs, rng_).relabeled;
    rep.batch = static_cast<int>(batch.size());

    if (cfg_.loop.repr_before_oegn) {
      repr_phase(batch, rep);
      oegn_phase(batch, rep);
    } else {
      oegn_phase(batch, rep);
      repr_phase(batch, rep);
    }

    // Intrinsic rewards from the current target encoder.
    const auto n = static_cast<Eigen::Index>(batch.size());
    const int obs_dim = env_.observation_dim();
    policy::AgentBatch ab;
    ab.states.resize(obs_dim, n);
    ab.next_states.resize(obs_dim, n);
    ab.actions.resize(agent_.action_dim(), n);
    ab.terminal.resize(n);
    Mat goal_states(obs_dim, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& s = batch[static_cast<std::size_t>(i)];
      ab.states.col(i) = s.transition->state;
      ab.next_states.col(i) = s.transition->next_state;
      ab.actions.col(i) = s.transition->action;
      ab.terminal[i] = s.transition->done ? 1.0 : 0.0;
      goal_states.col(i) = s.goal;
    }
    ab.goals = repr::encode_batch(encoder_, repr::encoder_inputs(encoder_, goal_states), true);
    ab.rewards = policy::intrinsic_rewards(encoder_, ab.next_states, ab.goals);
    rep.mean_intrinsic = ab.rewards.mean();
    mark(rep, "reward");

    guarded([&] { rep.agent = agent_.update(ab, rng_); });
    mark(rep, "agent");

    repr::smooth_update_target(encoder_, cfg_.contrastive.alpha_slow);
    mark(rep, "smooth");

    rep.nodes = graph_.size();
    rep.edges = graph_.edges().size();
    ++learning_steps_;
    if (loss_cb_) loss_cb_(rep);
    return rep;
  }

  /// Greedy evaluation towards the environment's extrinsic target.
  Evaluation evaluate(int n_episodes, std::uint64_t seed, Env eval_env) const {
    Rng rng(seed);
    Evaluation ev;
    const EmbeddedState g = repr::embed_target(encoder_, eval_env.goal_observation());
    for (int e = 0; e < n_episodes; ++e) {
      GroundState obs = eval_env.reset(rng);
      double best = eval_env.distance_to_goal();
      bool done = false;
      while (!done) {
        auto step = eval_env.step(agent_.act(obs, g, true, rng));
        best = std::min(best, eval_env.distance_to_goal());
        obs = std::move(step.observation);
        done = step.done || step.terminal;
      }
      ++ev.episodes;
      if (best < eval_env.config().goal_threshold) ++ev.successes;
      ev.mean_final_distance += eval_env.distance_to_goal();
      ev.mean_min_distance += best;
    }
    ev.mean_final_distance /= std::max(1, n_episodes);
    ev.mean_min_distance /= std::max(1, n_episodes);
    return ev;
  }

  /// All networks, for a post-mortem after a numerical abort.
  nn::Checkpoint checkpoint() const {
    nn::Checkpoint c = agent_.to_checkpoint();
    c.networks.emplace("encoder.online", encoder_.online);
    c.networks.emplace("encoder.target", encoder_.target);
    c.meta = {{"env_steps", env_steps_}, {"learning_steps", learning_steps_}, {"episodes", episodes_}};
    return c;
  }

  /// Where to write the checkpoint if a non-finite value aborts learning; empty disables the dump.
  void set_abort_checkpoint(std::string path) { abort_path_ = std::move(path); }

 private:
  void mark(LossReport& rep, const char* phase) { rep.phases.emplace_back(phase, phase_seq_++); }

  template <class F>
  void guarded(F&& f) {
    try {
      f();
    } catch (const NumericalAbort&) {
      if (!abort_path_.empty()) nn::write_checkpoint(abort_path_, checkpoint());
      throw;
    }
  }

  void repr_phase(const std::vector<store::LearningSample>& batch, LossReport& rep) {
    std::vector<const store::Transition*> pairs;
    for (const auto& s : batch) {
      if (cfg_.loop.learns_on_BG || s.source == store::BufferKind::kState) pairs.push_back(s.transition.get());
    }
    rep.repr_pairs = static_cast<int>(pairs.size());
    if (rep.repr_pairs > cfg_.contrastive.n_neg) {
      const int in = encoder_.input_dim();
      repr::ContrastiveBatch cb;
      cb.states.resize(in, rep.repr_pairs);
      cb.next_states.resize(in, rep.repr_pairs);
      for (int i = 0; i < rep.repr_pairs; ++i) {
        cb.states.col(i) = repr::encoder_input(encoder_, pairs[static_cast<std::size_t>(i)]->state);
        cb.next_states.col(i) = repr::encoder_input(encoder_, pairs[static_cast<std::size_t>(i)]->next_state);
      }
      cb.negatives = repr::sample_negatives(rng_, rep.repr_pairs, cfg_.contrastive.n_neg);
      guarded([&] {
        auto loss = repr::distop_loss(encoder_, cfg_.contrastive, cb);
        policy::require_finite(loss.loss, "representation loss");
        encoder_opt_.step(encoder_.online, loss.grads);
        rep.repr_loss = loss.loss;
        rep.repr_attraction = loss.attraction;
        rep.repr_repulsion = loss.repulsion;
        rep.repr_consistency = loss.consistency;
      });
    }
    mark(rep, "repr");
  }

  void oegn_phase(const std::vector<store::LearningSample>& batch, LossReport& rep) {
    const int updates = std::min<int>(cfg_.oegn.updates_per_batch, static_cast<int>(batch.size()));
    if (updates > 0) {
      const int in = encoder_.input_dim();
      Mat next(in, updates), prev(in, updates), goals(in, updates);
      for (int i = 0; i < updates; ++i) {
        const auto& t = *batch[static_cast<std::size_t>(i)].transition;
        next.col(i) = repr::encoder_input(encoder_, t.next_state);
        prev.col(i) = repr::encoder_input(encoder_, t.state);
        goals.col(i) = t.has_goal() ? repr::encoder_input(encoder_, t.goal_state) : Vec(Vec::Zero(in));
      }
      const Mat e_next = repr::encode_batch(encoder_, next, true);
      const Mat e_prev = repr::encode_batch(encoder_, prev, true);
      const Mat e_goal = repr::encode_batch(encoder_, goals, true);
      for (int i = 0; i < updates; ++i) {
        const auto& sample = batch[static_cast<std::size_t>(i)];
        topology::OegnSample s;
        s.e = e_next.col(i);
        s.e_prev = e_prev.col(i);
        if (sample.transition->has_goal()) s.goal = e_goal.col(i);
        // The cluster whose buffer supplied the sample.
        s.origin = sample.node;
        const auto r = topology::oegn_step(graph_, s);
        rep.created += r.created ? 1 : 0;
        rep.deleted += static_cast<int>(r.deleted.size());
      }
    }
    rep.oegn_updates = updates;
    mark(rep, "oegn");
  }

  SystemConfig cfg_;
  Env env_;
  Rng rng_;
  repr::EncoderParams encoder_;
  nn::Adam encoder_opt_;
  topology::TopologyGraph graph_;
  Agent agent_;
  VisitationWindow visits_;
  std::function<void(const LossReport&)> loss_cb_;
  std::string abort_path_;

  long env_steps_ = 0;
  long episodes_ = 0;
  long learning_steps_ = 0;
  long generated_ = 0;
  long routed_ = 0;
  long phase_seq_ = 0;
  double update_credit_ = 0.0;
};

/// Entropy-regularised agent on the extrinsic reward alone: no representation,
/// no topology, no goals, one uniform replay buffer.
template <class Env, class Agent>
class FlatSystem {
 public:
  struct Config {
    policy::SacConfig sac;
    double updates_per_step = 0.25;
    int batch_size = 64;
    std::size_t buffer_size = 15000;
    int warmup_episodes = 10;
    std::uint64_t seed = 0;
  };

  FlatSystem(Env env, Config cfg) : cfg_(std::move(cfg)), env_(std::move(env)), rng_(cfg_.seed) {
    agent_ = make_agent<Agent>(env_, 0, cfg_.sac, rng_);
  }

  Env& env() { return env_; }
  Agent& agent() { return agent_; }
  long env_steps() const { return env_steps_; }
  long learning_steps() const { return learning_steps_; }

  double run_episode() {
    const bool warm = episodes_ < cfg_.warmup_episodes;
    GroundState obs = env_.reset(rng_);
    const Vec none;
    double ret = 0.0;
    bool done = false;
    while (!done) {
      const Vec action = warm ? env_.random_action(rng_) : agent_.act(obs, none, false, rng_);
      auto step = env_.step(action);
      buffer_.push_back({obs, action, step.observation, step.reward, step.terminal});
      if (buffer_.size() > cfg_.buffer_size) buffer_.pop_front();
      ret += step.reward;
      ++env_steps_;
      obs = std::move(step.observation);
      done = step.done || step.terminal;
      credit_ += cfg_.updates_per_step;
      while (credit_ >= 1.0) {
        credit_ -= 1.0;
        if (buffer_.size() < static_cast<std::size_t>(cfg_.batch_size)) continue;
        learning_step();
      }
    }
    ++episodes_;
    return ret;
  }

  policy::AgentLosses learning_step() {
    const auto n = static_cast<Eigen::Index>(cfg_.batch_size);
    const int obs_dim = env_.observation_dim();
    policy::AgentBatch ab;
    ab.states.resize(obs_dim, n);
    ab.next_states.resize(obs_dim, n);
    ab.goals.resize(0, n);
    ab.actions.resize(agent_.action_dim(), n);
    ab.rewards.resize(n);
    ab.terminal.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& t = buffer_[uniform_index(rng_, buffer_.size())];
      ab.states.col(i) = t.state;
      ab.next_states.col(i) = t.next_state;
      ab.actions.col(i) = t.action;
      ab.rewards[i] = t.reward;
      ab.terminal[i] = t.terminal ? 1.0 : 0.0;
    }
    ++learning_steps_;
    return agent_.update(ab, rng_);
  }

  /// Greedy evaluation; success means getting within the reward threshold.
  Evaluation evaluate(int n_episodes, std::uint64_t seed, Env eval_env) const {
    Rng rng(seed);
    Evaluation ev;
    const Vec none;
    for (int e = 0; e < n_episodes; ++e) {
      GroundState obs = eval_env.reset(rng);
      double best = eval_env.distance_to_goal();
      bool done = false;
      while (!done) {
        auto step = eval_env.step(agent_.act(obs, none, true, rng));
        best = std::min(best, eval_env.distance_to_goal());
        obs = std::move(step.observation);
        done = step.done || step.terminal;
      }
      ++ev.episodes;
      if (best < eval_env.config().goal_threshold) ++ev.successes;
      ev.mean_final_distance += eval_env.distance_to_goal();
      ev.mean_min_distance += best;
    }
    ev.mean_final_distance /= std::max(1, n_episodes);
    ev.mean_min_distance /= std::max(1, n_episodes);
    return ev;
  }

 private:
  struct Step {
    GroundState state;
    Vec action;
    GroundState next_state;
    double reward;
    bool terminal;
  };

  Config cfg_;
  Env env_;
  Rng rng_;
  Agent agent_;
  std::deque<Step> buffer_;
  long env_steps_ = 0;
  long episodes_ = 0;
  long learning_steps_ = 0;
  double credit_ = 0.0;
};

}  // namespace distop::loop
