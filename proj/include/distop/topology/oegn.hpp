#pragma once

#include <vector>

#include "distop/topology/graph.hpp"

namespace distop::topology {

/// One OEGN learning input, already embedded with the target encoder.
struct OegnSample {
  EmbeddedState e;       // reached state
  EmbeddedState e_prev;  // previous state
  EmbeddedState goal;    // original goal; empty for goal-free samples
  NodeId origin = kNoNode;
};

struct EdgeEvents {
  std::optional<EdgeKey> refreshed;  // edge set to age 0 between the two winners
  std::vector<EdgeKey> aged;
  std::vector<EdgeKey> removed;
};

struct StepReport {
  NodeId closest = kNoNode;
  double closest_distance = 0.0;
  std::vector<NodeId> deleted;
  std::optional<NodeId> created;
  std::vector<NodeId> moved;
  EdgeEvents edges;
};

enum class DeleteRule { kError, kProximity, kEdgeless };

struct Deletion {
  NodeId id;
  DeleteRule rule;
};

/// Applies, in order: (1) error above delta_error, (2) the less filled endpoint
/// of an edge shorter than delta_prox, (3) edgeless nodes. Rules (1) and (2)
/// only remove nodes selected at least n_del times. Never empties the graph.
inline std::vector<Deletion> apply_delete_operator(TopologyGraph& g) {
  const auto& cfg = g.config();
  std::vector<Deletion> out;
  auto can_delete = [&] { return g.size() > 1; };

  std::vector<NodeId> stale;
  for (const auto& n : g.nodes()) {
    if (n.error_count > cfg.delta_error && n.selection_count >= cfg.n_del) stale.push_back(n.id);
  }
  for (NodeId id : stale) {
    if (!can_delete()) return out;
    g.remove_node(id);
    out.push_back({id, DeleteRule::kError});
  }

  const double prox = cfg.prox();
  std::vector<EdgeKey> snapshot;
  for (const auto& [key, age] : g.edges()) snapshot.push_back(key);
  for (const auto& key : snapshot) {
    const ClusterNode* a = g.find(key.first);
    const ClusterNode* b = g.find(key.second);
    if (!a || !b) continue;
    if (!((a->w - b->w).norm() < prox)) continue;
    // Less filled endpoint goes; on a tie the younger (larger id) node.
    const ClusterNode* victim = a->count() < b->count() ? a : (b->count() < a->count() ? b : (a->id > b->id ? a : b));
    if (victim->selection_count < cfg.n_del) continue;
    if (!can_delete()) return out;
    const NodeId id = victim->id;
    g.remove_node(id);
    out.push_back({id, DeleteRule::kProximity});
  }

  std::vector<NodeId> isolated;
  for (const auto& n : g.nodes()) {
    if (!g.has_edges(n.id)) isolated.push_back(n.id);
  }
  for (NodeId id : isolated) {
    if (!can_delete()) return out;
    g.remove_node(id);
    out.push_back({id, DeleteRule::kEdgeless});
  }
  return out;
}

/// w_closest += alpha (e - w_closest); each neighbour moves with alpha_neighbors.
inline std::vector<NodeId> apply_moving_operator(TopologyGraph& g, const EmbeddedState& e, NodeId closest) {
  ClusterNode& c = g.node(closest);
  c.w += g.config().alpha * (e - c.w);
  std::vector<NodeId> moved{closest};
  for (NodeId id : g.neighbors(closest)) {
    ClusterNode& n = g.node(id);
    n.w += g.config().alpha_neighbors * (e - n.w);
    moved.push_back(id);
  }
  return moved;
}

/// Connects the winners of e and e_prev with age 0, ages the winner's other
/// edges by one and drops edges older than delta_age.
inline EdgeEvents apply_edge_operator(TopologyGraph& g, const EmbeddedState& e, const EmbeddedState& e_prev) {
  EdgeEvents ev;
  const NodeId winner = g.nearest(e).id;
  const NodeId prev_winner = g.nearest(e_prev).id;
  if (winner != prev_winner) {
    g.set_edge(winner, prev_winner, 0);
    ev.refreshed = edge_key(winner, prev_winner);
  }
  for (NodeId other : g.neighbors(winner)) {
    if (other == prev_winner) continue;
    const int age = *g.edge_age(winner, other) + 1;
    if (age > g.config().delta_age) {
      g.remove_edge(winner, other);
      ev.removed.push_back(edge_key(winner, other));
    } else {
      g.set_edge(winner, other, age);
      ev.aged.push_back(edge_key(winner, other));
    }
  }
  return ev;
}

inline bool goal_gate_passes(const OegnConfig& cfg, const OegnSample& s) {
  if (cfg.delta_success == kInf) return true;
  if (s.goal.size() == 0) return false;
  return (s.goal - s.e).norm() <= cfg.delta_success;
}

/// One learning iteration of the growing network.
inline StepReport oegn_step(TopologyGraph& g, const OegnSample& s) {
  const int d = g.dim();
  if (s.e.size() != d || s.e_prev.size() != d || (s.goal.size() != 0 && s.goal.size() != d)) {
    throw InvalidArgument("oegn_step: embedding dimension mismatch");
  }
  StepReport report;
  const Nearest closest = g.nearest(s.e);
  report.closest = closest.id;
  report.closest_distance = closest.distance;

  if (s.origin != kNoNode) {
    if (ClusterNode* origin = g.find(s.origin)) ++origin->error_count;
  }
  g.node(closest.id).error_count = 0;

  for (const auto& del : apply_delete_operator(g)) report.deleted.push_back(del.id);
  if (!report.deleted.empty()) return report;

  const auto& cfg = g.config();
  const bool goal_ok = goal_gate_passes(cfg, s);
  const ClusterNode& c = g.node(closest.id);
  if (goal_ok && closest.distance > cfg.delta_new && c.selection_count >= cfg.delta_count) {
    const NodeId fresh = g.add_node(s.e);
    g.set_edge(fresh, closest.id, 0);
    report.created = fresh;
  } else if (goal_ok) {
    report.moved = apply_moving_operator(g, s.e, closest.id);
  }
  report.edges = apply_edge_operator(g, s.e, s.e_prev);
  return report;
}

}  // namespace distop::topology
