#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "distop/repr/encoder.hpp"
#include "distop/store/sampling.hpp"
#include "distop/topology/graph.hpp"

namespace distop::selector {

struct SelectorConfig {
  double t_ext = 0.0;                    // extrinsic reward temperature
  double alpha_skew_prime_plus1 = -1.0;  // novelty exponent 1 + alpha'_skew
  double alpha_c = 0.05;                 // cluster value learning rate
  double neighbor_rate = 0.0;            // neighbours learn at neighbor_rate * alpha_c
  int max_tries = 16;                    // ball-rejection attempts per goal

  void validate() const {
    if (!(t_ext >= 0.0)) throw ConfigError("high_level.t_ext must be non-negative");
    if (!(alpha_skew_prime_plus1 <= 1.0)) throw ConfigError("high_level.one_plus_alpha_skew_prime must be <= 1");
    if (!(alpha_c > 0.0 && alpha_c <= 1.0)) throw ConfigError("high_level.alpha_c must lie in (0, 1]");
    if (!(neighbor_rate >= 0.0)) throw ConfigError("high_level.neighbors_learning_rate must be non-negative");
    if (max_tries < 1) throw ConfigError("high_level.max_tries must be at least 1");
  }
};

/// R <- (1 - alpha_c) R + alpha_c r_c on the node, and with rate
/// neighbor_rate * alpha_c on each direct neighbour.
inline void update_cluster_value(topology::TopologyGraph& graph, NodeId id, double r_c, const SelectorConfig& cfg) {
  if (!std::isfinite(r_c)) throw InvalidArgument("cluster reward must be finite");
  auto& node = graph.node(id);
  node.ext_value = (1.0 - cfg.alpha_c) * node.ext_value + cfg.alpha_c * r_c;
  const double rate = cfg.neighbor_rate * cfg.alpha_c;
  if (rate == 0.0) return;
  for (NodeId n : graph.neighbors(id)) {
    auto& nb = graph.node(n);
    nb.ext_value = (1.0 - rate) * nb.ext_value + rate * r_c;
  }
}

struct HighLevelDistribution {
  std::vector<double> probs;   // indexed like graph.nodes(); 0 for empty clusters
  std::vector<double> logits;  // -inf for empty clusters
};

/// softmax over non-empty clusters of t_ext * R_c + (1 + alpha'_skew) * log count(c).
inline HighLevelDistribution high_level_distribution(const topology::TopologyGraph& graph, const SelectorConfig& cfg) {
  HighLevelDistribution out;
  out.logits.assign(graph.size(), -kInf);
  out.probs.assign(graph.size(), 0.0);
  double best = -kInf;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto& n = graph.nodes()[i];
    if (n.count() == 0) continue;
    out.logits[i] = cfg.t_ext * n.ext_value + cfg.alpha_skew_prime_plus1 * std::log(static_cast<double>(n.count()));
    best = std::max(best, out.logits[i]);
  }
  if (best == -kInf) throw InvalidState("high-level distribution: every cluster is empty");
  double total = 0.0;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    if (out.logits[i] == -kInf) continue;
    out.probs[i] = std::exp(out.logits[i] - best);
    total += out.probs[i];
  }
  for (double& p : out.probs) p /= total;
  return out;
}

struct GoalSample {
  GroundState goal_state;
  EmbeddedState goal_embedding;
  NodeId node = kNoNode;
  int tries = 0;          // ball draws consumed
  bool fell_back = false; // rejection budget exhausted, uniform pick used
};

/// Uniform point in the L2 ball of `radius` around `center`.
inline Vec sample_in_ball(const Vec& center, double radius, Rng& rng) {
  Vec dir = standard_normal(rng, center.size());
  double norm = dir.norm();
  while (norm == 0.0) {
    dir = standard_normal(rng, center.size());
    norm = dir.norm();
  }
  const double r = radius * std::pow(uniform01(rng), 1.0 / static_cast<double>(center.size()));
  return center + (r / norm) * dir;
}

/// Candidate goal-states of a cluster: reached states of B^S and goal-states of B^G.
inline std::vector<const GroundState*> goal_candidates(const topology::ClusterNode& node) {
  std::vector<const GroundState*> out;
  for (const auto& t : node.buffers.states) out.push_back(&t->next_state);
  for (const auto& t : node.buffers.goals) out.push_back(&t->goal_state);
  return out;
}

/// Draws a point in the delta_new ball around w_c until its nearest node is c
/// (at most max_tries), then returns the stored state of c whose target
/// embedding is closest to it. Returns nullopt for a cluster with no stored
/// states; the caller redraws a cluster. Increments selection_count on success.
inline std::optional<GoalSample> sample_goal_state(topology::TopologyGraph& graph, NodeId id,
                                                   const repr::EncoderParams& params, int max_tries, Rng& rng) {
  if (max_tries < 1) throw InvalidArgument("max_tries must be at least 1");
  auto& node = graph.node(id);
  const auto candidates = goal_candidates(node);
  if (candidates.empty()) return std::nullopt;

  GoalSample out;
  out.node = id;
  std::optional<Vec> accepted;
  for (int t = 0; t < max_tries && !accepted; ++t) {
    ++out.tries;
    Vec p = sample_in_ball(node.w, graph.config().delta_new, rng);
    if (graph.nearest(p).id == id) accepted = std::move(p);
  }

  std::size_t pick = 0;
  if (accepted) {
    Mat inputs(params.input_dim(), static_cast<Eigen::Index>(candidates.size()));
    for (std::size_t i = 0; i < candidates.size(); ++i) inputs.col(static_cast<Eigen::Index>(i)) = repr::encoder_input(params, *candidates[i]);
    const Mat emb = repr::encode_batch(params, inputs, true);
    (emb.colwise() - *accepted).colwise().squaredNorm().minCoeff(&pick);
  } else {
    out.fell_back = true;
    pick = uniform_index(rng, candidates.size());
  }
  out.goal_state = *candidates[pick];
  out.goal_embedding = repr::embed_target(params, out.goal_state);
  ++node.selection_count;
  return out;
}

}  // namespace distop::selector
