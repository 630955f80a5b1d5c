#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "distop/repr/encoder.hpp"
#include "distop/store/transition.hpp"
#include "distop/topology/graph.hpp"

namespace distop::store {

struct Route {
  NodeId state_node = kNoNode;
  NodeId goal_node = kNoNode;  // kNoNode when the transition carries no goal
};

/// Appends t to B^S of nearest(target(next_state)) and, when it has a goal,
/// to B^G of nearest(target(goal_state)).
inline Route route_transition(topology::TopologyGraph& graph, const repr::EncoderParams& params, TransitionPtr t) {
  Route r;
  r.state_node = graph.nearest(repr::embed_target(params, t->next_state)).id;
  graph.add_evicted(graph.node(r.state_node).buffers.states.push(t));
  if (t->has_goal()) {
    r.goal_node = graph.nearest(repr::embed_target(params, t->goal_state)).id;
    graph.add_evicted(graph.node(r.goal_node).buffers.goals.push(t));
  }
  return r;
}

/// Same routing with precomputed target embeddings.
inline Route route_embedded(topology::TopologyGraph& graph, TransitionPtr t, const EmbeddedState& next_embedding,
                            const EmbeddedState* goal_embedding) {
  Route r;
  r.state_node = graph.nearest(next_embedding).id;
  graph.add_evicted(graph.node(r.state_node).buffers.states.push(t));
  if (goal_embedding) {
    r.goal_node = graph.nearest(*goal_embedding).id;
    graph.add_evicted(graph.node(r.goal_node).buffers.goals.push(t));
  }
  return r;
}

inline std::size_t stored_transitions(const topology::TopologyGraph& graph) {
  std::size_t n = 0;
  for (const auto& node : graph.nodes()) n += node.buffers.states.size();
  return n;
}

/// p(c) proportional to count(c)^exponent over clusters with count > 0;
/// empty clusters get probability 0 for every exponent. Indexed like graph.nodes().
inline std::vector<double> skewed_cluster_distribution(const topology::TopologyGraph& graph, double exponent) {
  std::vector<double> logits(graph.size(), -kInf);
  double best = -kInf;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto c = graph.nodes()[i].count();
    if (c == 0) continue;
    logits[i] = exponent * std::log(static_cast<double>(c));
    best = std::max(best, logits[i]);
  }
  if (best == -kInf) throw InvalidState("skewed distribution: every cluster is empty");
  std::vector<double> p(graph.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (logits[i] == -kInf) continue;
    p[i] = std::exp(logits[i] - best);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

struct LearningMixConfig {
  /// 1 + alpha_skew.
  double skew_exponent = 0.0;
  /// Fraction of slots whose cluster is drawn from the high-level policy.
  double high_ratio = 0.0;
  int max_redraws = 16;
};

struct LearningSample {
  TransitionPtr transition;
  NodeId node = kNoNode;
  BufferKind source = BufferKind::kState;
  /// Goal used for learning; starts as the original goal and may be relabeled.
  GroundState goal;
  bool relabeled = false;
};

struct BatchStats {
  long redraws = 0;
  long fallbacks = 0;
};

/// Draws a cluster per slot (from p_skew, or from `high_level` with probability
/// mix.high_ratio), then B^G or B^S with equal probability, then a uniform
/// transition. Empty picks are redrawn up to mix.max_redraws times, after which
/// the first non-empty B^S in id order is used.
inline std::vector<LearningSample> sample_learning_batch(const topology::TopologyGraph& graph, std::size_t batch_size,
                                                         const LearningMixConfig& mix,
                                                         const std::vector<double>* high_level, Rng& rng,
                                                         BatchStats* stats = nullptr) {
  if (stored_transitions(graph) < batch_size || stored_transitions(graph) == 0) {
    throw NotReady("not enough stored transitions for a learning batch");
  }
  const auto skew = skewed_cluster_distribution(graph, mix.skew_exponent);
  if (mix.high_ratio > 0.0 && (!high_level || high_level->size() != graph.size())) {
    throw InvalidArgument("high-level mixing requested without a matching distribution");
  }
  std::vector<LearningSample> batch;
  batch.reserve(batch_size);
  for (std::size_t slot = 0; slot < batch_size; ++slot) {
    bool filled = false;
    for (int attempt = 0; attempt < mix.max_redraws && !filled; ++attempt) {
      const bool use_high = mix.high_ratio > 0.0 && uniform01(rng) < mix.high_ratio;
      const std::size_t ci = sample_categorical(rng, use_high ? *high_level : skew);
      const BufferKind kind = uniform01(rng) < 0.5 ? BufferKind::kGoal : BufferKind::kState;
      const auto& node = graph.nodes()[ci];
      const Fifo& buf = node.buffers.of(kind);
      if (buf.empty()) {
        if (stats) ++stats->redraws;
        continue;
      }
      const auto& t = buf[uniform_index(rng, buf.size())];
      batch.push_back({t, node.id, kind, t->goal_state, false});
      filled = true;
    }
    if (!filled) {
      if (stats) ++stats->fallbacks;
      for (const auto& node : graph.nodes()) {
        if (node.buffers.states.empty()) continue;
        const auto& t = node.buffers.states[uniform_index(rng, node.buffers.states.size())];
        batch.push_back({t, node.id, BufferKind::kState, t->goal_state, false});
        break;
      }
    }
  }
  return batch;
}

enum class RelabelStrategy { kHighLevel, kUniform, kTopological };

inline RelabelStrategy relabel_strategy_from_string(const std::string& s) {
  if (s == "high_level") return RelabelStrategy::kHighLevel;
  if (s == "uniform") return RelabelStrategy::kUniform;
  if (s == "topological") return RelabelStrategy::kTopological;
  throw ConfigError("unknown relabel strategy '" + s + "'");
}

inline std::string to_string(RelabelStrategy s) {
  switch (s) {
    case RelabelStrategy::kHighLevel: return "high_level";
    case RelabelStrategy::kUniform: return "uniform";
    case RelabelStrategy::kTopological: return "topological";
  }
  return "?";
}

struct RelabelConfig {
  RelabelStrategy strategy = RelabelStrategy::kUniform;
  /// Probability that an eligible sample gets a new goal. Goal-free samples always do.
  double fraction = 0.5;
  /// Exponent of the cluster draw for uniform relabeling (1 + alpha_skew).
  double skew_exponent = 0.0;
};

struct RelabelStats {
  long relabeled = 0;
  long isolated_fallbacks = 0;
};

namespace detail {

inline const GroundState& random_state_of(const topology::ClusterNode& node, Rng& rng) {
  return node.buffers.states[uniform_index(rng, node.buffers.states.size())]->next_state;
}

}  // namespace detail

/// Replaces goals of B^S-sourced samples (B^S and B^G for topological relabeling).
/// Only LearningSample::goal changes; the shared transitions are never touched.
inline RelabelStats relabel(std::vector<LearningSample>& batch, const RelabelConfig& cfg,
                            const topology::TopologyGraph& graph, const std::vector<double>* high_level, Rng& rng) {
  if (batch.empty()) throw InvalidArgument("relabel: empty batch");
  RelabelStats stats;
  std::vector<double> skew;
  if (cfg.strategy == RelabelStrategy::kUniform) skew = skewed_cluster_distribution(graph, cfg.skew_exponent);
  if (cfg.strategy == RelabelStrategy::kHighLevel && (!high_level || high_level->size() != graph.size())) {
    throw InvalidArgument("high-level relabeling requires the high-level distribution");
  }
  for (auto& s : batch) {
    const bool eligible = s.source == BufferKind::kState || cfg.strategy == RelabelStrategy::kTopological;
    const bool forced = s.goal.size() == 0;
    if (!forced && !(eligible && uniform01(rng) < cfg.fraction)) continue;
    switch (cfg.strategy) {
      case RelabelStrategy::kHighLevel:
        s.goal = detail::random_state_of(graph.nodes()[sample_categorical(rng, *high_level)], rng);
        break;
      case RelabelStrategy::kUniform:
        s.goal = detail::random_state_of(graph.nodes()[sample_categorical(rng, skew)], rng);
        break;
      case RelabelStrategy::kTopological: {
        std::vector<NodeId> candidates;
        if (graph.contains(s.node)) {
          for (NodeId n : graph.neighbors(s.node)) {
            if (!graph.node(n).buffers.states.empty()) candidates.push_back(n);
          }
        }
        NodeId pick = kNoNode;
        if (!candidates.empty()) {
          pick = candidates[uniform_index(rng, candidates.size())];
        } else {
          ++stats.isolated_fallbacks;
          if (graph.contains(s.node) && !graph.node(s.node).buffers.states.empty()) pick = s.node;
        }
        if (pick == kNoNode) {
          // Source cluster vanished or holds no states: any non-empty cluster.
          const auto p = skewed_cluster_distribution(graph, 0.0);
          pick = graph.nodes()[sample_categorical(rng, p)].id;
        }
        s.goal = detail::random_state_of(graph.node(pick), rng);
        break;
      }
    }
    s.relabeled = true;
    ++stats.relabeled;
  }
  return stats;
}

}  // namespace distop::store
