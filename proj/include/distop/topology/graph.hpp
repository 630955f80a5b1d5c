#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "distop/common.hpp"
#include "distop/store/transition.hpp"

namespace distop::topology {

/// Thresholds of the growing network. Defaults are the fixed values that are
/// shared by every environment; delta_new and delta_success are per-environment.
struct OegnConfig {
  double delta_new = 0.6;
  double delta_success = kInf;
  int delta_age = 600;
  int delta_error = 600;
  /// Proximity deletion radius; unset means 0.4 * delta_new.
  std::optional<double> delta_prox;
  int delta_count = 5;
  int n_del = 10;
  double alpha = 0.001;
  double alpha_neighbors = 1e-6;
  int updates_per_batch = 32;
  /// Global transition budget shared by all clusters.
  std::size_t buffer_size = 15000;
  /// Initial nodes are drawn uniformly from [-init_scale, init_scale]^d.
  double init_scale = 0.1;

  double prox() const { return delta_prox.value_or(0.4 * delta_new); }

  void validate() const {
    if (!(delta_new > 0.0)) throw ConfigError("oegn.delta_new must be positive");
    if (!(delta_success > 0.0)) throw ConfigError("oegn.delta_success must be positive");
    if (delta_age <= 0) throw ConfigError("oegn.delta_age must be positive");
    if (delta_error <= 0) throw ConfigError("oegn.delta_error must be positive");
    if (!(prox() > 0.0 && prox() < delta_new)) throw ConfigError("oegn.delta_prox must lie in (0, delta_new)");
    if (delta_count < 0) throw ConfigError("oegn.delta_count must be non-negative");
    if (n_del < 0) throw ConfigError("oegn.n_del must be non-negative");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("oegn.alpha must lie in [0, 1]");
    if (!(alpha_neighbors >= 0.0 && alpha_neighbors <= 1.0)) throw ConfigError("oegn.alpha_neighbors must lie in [0, 1]");
    if (updates_per_batch < 0) throw ConfigError("oegn.updates_per_batch must be non-negative");
    if (buffer_size < 1) throw ConfigError("oegn.buffer_size must be positive");
  }
};

struct ClusterNode {
  NodeId id = kNoNode;
  EmbeddedState w;
  long error_count = 0;
  long selection_count = 0;
  double ext_value = 0.0;
  store::ClusterBufferPair buffers;

  /// Density proxy: occupancy of B^S.
  std::size_t count() const { return buffers.states.size(); }
};

struct Nearest {
  NodeId id = kNoNode;
  double distance = kInf;
};

using EdgeKey = std::pair<NodeId, NodeId>;

inline EdgeKey edge_key(NodeId a, NodeId b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

/// Nodes plus aged undirected edges. Nodes are kept sorted by id, and ids are
/// never reused, so iteration order is deterministic.
class TopologyGraph {
 public:
  TopologyGraph() = default;
  TopologyGraph(OegnConfig cfg, int dim) : cfg_(std::move(cfg)), dim_(dim) {
    cfg_.validate();
    if (dim <= 0) throw InvalidArgument("graph dimension must be positive");
  }

  /// Two random connected nodes.
  static TopologyGraph initialized(OegnConfig cfg, int dim, Rng& rng) {
    TopologyGraph g(std::move(cfg), dim);
    std::uniform_real_distribution<double> u(-g.cfg_.init_scale, g.cfg_.init_scale);
    for (int n = 0; n < 2; ++n) {
      Vec w(dim);
      for (int i = 0; i < dim; ++i) w[i] = u(rng);
      g.add_node(w);
    }
    g.set_edge(g.nodes_[0].id, g.nodes_[1].id, 0);
    return g;
  }

  const OegnConfig& config() const { return cfg_; }
  OegnConfig& mutable_config() { return cfg_; }
  int dim() const { return dim_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  const std::vector<ClusterNode>& nodes() const { return nodes_; }
  std::vector<ClusterNode>& nodes() { return nodes_; }
  const std::map<EdgeKey, int>& edges() const { return edges_; }

  ClusterNode* find(NodeId id) {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id, [](const ClusterNode& n, NodeId v) { return n.id < v; });
    return (it != nodes_.end() && it->id == id) ? &*it : nullptr;
  }
  const ClusterNode* find(NodeId id) const { return const_cast<TopologyGraph*>(this)->find(id); }
  bool contains(NodeId id) const { return find(id) != nullptr; }

  ClusterNode& node(NodeId id) {
    ClusterNode* n = find(id);
    if (!n) throw InvalidArgument("unknown node id " + std::to_string(id));
    return *n;
  }
  const ClusterNode& node(NodeId id) const { return const_cast<TopologyGraph*>(this)->node(id); }

  NodeId add_node(const EmbeddedState& w) {
    if (w.size() != dim_) throw InvalidArgument("node vector dimension mismatch");
    ClusterNode n;
    n.id = next_id_++;
    n.w = w;
    nodes_.push_back(std::move(n));
    ++created_;
    evicted_ += rebalance_capacity();
    return nodes_.back().id;
  }

  /// Restores a node with a known id (loader use); ids must arrive in increasing order.
  void restore_node(NodeId id, const EmbeddedState& w, long error, long selection, double ext) {
    if (!nodes_.empty() && id <= nodes_.back().id) throw InvalidArgument("restored node ids must increase");
    ClusterNode n;
    n.id = id;
    n.w = w;
    n.error_count = error;
    n.selection_count = selection;
    n.ext_value = ext;
    nodes_.push_back(std::move(n));
    next_id_ = std::max(next_id_, id + 1);
    rebalance_capacity();
  }

  void set_edge(NodeId a, NodeId b, int age) {
    if (a == b) throw InvalidArgument("self-edges are not allowed");
    if (!contains(a) || !contains(b)) throw InvalidArgument("edge endpoint does not exist");
    edges_[edge_key(a, b)] = age;
  }
  void remove_edge(NodeId a, NodeId b) { edges_.erase(edge_key(a, b)); }
  std::optional<int> edge_age(NodeId a, NodeId b) const {
    auto it = edges_.find(edge_key(a, b));
    if (it == edges_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<NodeId> neighbors(NodeId id) const {
    std::vector<NodeId> out;
    for (const auto& [key, age] : edges_) {
      if (key.first == id) out.push_back(key.second);
      else if (key.second == id) out.push_back(key.first);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  bool has_edges(NodeId id) const {
    for (const auto& [key, age] : edges_) {
      if (key.first == id || key.second == id) return true;
    }
    return false;
  }

  /// Closest node in L2; ties go to the lowest id.
  Nearest nearest(const EmbeddedState& e) const {
    if (nodes_.empty()) throw InvalidState("nearest_node on an empty graph");
    if (e.size() != dim_) throw InvalidArgument("query dimension mismatch");
    Nearest best;
    double best_sq = kInf;
    for (const auto& n : nodes_) {
      const double sq = (n.w - e).squaredNorm();
      if (sq < best_sq) {
        best_sq = sq;
        best.id = n.id;
      }
    }
    best.distance = std::sqrt(best_sq);
    return best;
  }

  /// Nearest among nodes other than `excluded`.
  Nearest nearest_excluding(const EmbeddedState& e, NodeId excluded) const {
    Nearest best;
    double best_sq = kInf;
    for (const auto& n : nodes_) {
      if (n.id == excluded) continue;
      const double sq = (n.w - e).squaredNorm();
      if (sq < best_sq) {
        best_sq = sq;
        best.id = n.id;
      }
    }
    best.distance = std::sqrt(best_sq);
    return best;
  }

  std::size_t cluster_count(NodeId id) const { return node(id).count(); }

  std::size_t per_cluster_capacity() const {
    return nodes_.empty() ? cfg_.buffer_size : std::max<std::size_t>(1, cfg_.buffer_size / nodes_.size());
  }

  /// Removes a node and its edges, handing its buffered transitions to the
  /// surviving node nearest to its reference vector.
  void remove_node(NodeId id) {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id, [](const ClusterNode& n, NodeId v) { return n.id < v; });
    if (it == nodes_.end() || it->id != id) throw InvalidArgument("unknown node id " + std::to_string(id));
    if (nodes_.size() <= 1) throw InvalidState("cannot remove the last node");
    for (auto e = edges_.begin(); e != edges_.end();) {
      if (e->first.first == id || e->first.second == id) e = edges_.erase(e);
      else ++e;
    }
    ClusterNode removed = std::move(*it);
    nodes_.erase(it);
    ++deleted_;
    evicted_ += rebalance_capacity();
    ClusterNode& heir = node(nearest(removed.w).id);
    for (const auto& t : removed.buffers.states) evicted_ += heir.buffers.states.push(t);
    for (const auto& t : removed.buffers.goals) evicted_ += heir.buffers.goals.push(t);
  }

  long created_total() const { return created_; }
  long deleted_total() const { return deleted_; }
  long evicted_total() const { return evicted_; }
  void add_evicted(std::size_t n) { evicted_ += static_cast<long>(n); }

  /// Structural violations (empty when sound).
  std::vector<std::string> check_invariants() const {
    std::vector<std::string> bad;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      if (i > 0 && nodes_[i - 1].id >= n.id) bad.push_back("node ids not strictly increasing");
      if (n.w.size() != dim_) bad.push_back("node " + std::to_string(n.id) + " has wrong dimension");
      if (n.error_count < 0 || n.selection_count < 0) bad.push_back("node " + std::to_string(n.id) + " has a negative counter");
      if (n.buffers.states.size() > n.buffers.capacity() || n.buffers.goals.size() > n.buffers.capacity()) {
        bad.push_back("node " + std::to_string(n.id) + " buffer over capacity");
      }
      if (!n.w.allFinite()) bad.push_back("node " + std::to_string(n.id) + " has a non-finite vector");
    }
    for (const auto& [key, age] : edges_) {
      if (key.first == key.second) bad.push_back("self-edge on " + std::to_string(key.first));
      if (key.first > key.second) bad.push_back("edge key not normalised");
      if (!contains(key.first) || !contains(key.second)) bad.push_back("dangling edge");
      if (age < 0) bad.push_back("negative edge age");
    }
    return bad;
  }

 private:
  std::size_t rebalance_capacity() {
    const std::size_t cap = per_cluster_capacity();
    std::size_t evicted = 0;
    for (auto& n : nodes_) evicted += n.buffers.set_capacity(cap);
    return evicted;
  }

  OegnConfig cfg_;
  int dim_ = 0;
  std::vector<ClusterNode> nodes_;
  std::map<EdgeKey, int> edges_;
  NodeId next_id_ = 0;
  long created_ = 0;
  long deleted_ = 0;
  long evicted_ = 0;
};

}  // namespace distop::topology
