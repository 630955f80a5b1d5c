#pragma once

// Small builders shared by the unit tests.

#include <memory>

#include "distop/repr/encoder.hpp"
#include "distop/store/transition.hpp"
#include "distop/topology/graph.hpp"

namespace distop::fixtures {

inline Vec v3(double x, double y = 0.0, double z = 0.0) {
  Vec v(3);
  v << x, y, z;
  return v;
}

/// Encoder whose online and target networks are both the identity map.
inline repr::EncoderParams identity_encoder(int dim) {
  Rng rng(0);
  repr::EncoderParams p;
  p.online = nn::Mlp({dim, dim}, nn::Activation::kIdentity, rng);
  p.online.layers()[0].weight = Mat::Identity(dim, dim);
  p.online.layers()[0].bias = Vec::Zero(dim);
  p.target = p.online;
  return p;
}

inline std::shared_ptr<store::Transition> transition(const Vec& state, const Vec& next, const Vec& goal = Vec()) {
  auto t = std::make_shared<store::Transition>();
  t->state = state;
  t->next_state = next;
  t->goal_state = goal;
  t->action = Vec::Zero(1);
  return t;
}

/// Pushes n transitions whose next_state equals the node's reference vector.
inline void fill(topology::TopologyGraph& g, NodeId id, int n_states, int n_goals) {
  auto& node = g.node(id);
  for (int i = 0; i < n_states; ++i) node.buffers.states.push(transition(node.w, node.w, node.w));
  for (int i = 0; i < n_goals; ++i) node.buffers.goals.push(transition(node.w, node.w, node.w));
}

}  // namespace distop::fixtures
