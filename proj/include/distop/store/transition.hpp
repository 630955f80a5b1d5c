#pragma once

#include <cstddef>
#include <deque>
#include <memory>

#include "distop/common.hpp"

namespace distop::store {

/// One environment step.
struct Transition {
  GroundState state;
  Vec action;
  GroundState next_state;
  /// Goal-state pursued when the step was taken; empty during goal-free warmup.
  GroundState goal_state;
  double ext_reward = 0.0;
  bool done = false;
  long episode_id = 0;
  int step_index = 0;
  /// Cluster the episode's goal was drawn from (kNoNode during warmup).
  NodeId goal_node = kNoNode;

  bool has_goal() const { return goal_state.size() > 0; }
};

using TransitionPtr = std::shared_ptr<const Transition>;

enum class BufferKind { kState, kGoal };

/// Bounded oldest-first FIFO.
class Fifo {
 public:
  explicit Fifo(std::size_t capacity = 1) : capacity_(capacity < 1 ? 1 : capacity) {}

  /// Returns how many elements were evicted.
  std::size_t push(TransitionPtr t) {
    items_.push_back(std::move(t));
    return trim();
  }

  std::size_t set_capacity(std::size_t capacity) {
    capacity_ = capacity < 1 ? 1 : capacity;
    return trim();
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const TransitionPtr& operator[](std::size_t i) const { return items_[i]; }
  const TransitionPtr& front() const { return items_.front(); }
  const TransitionPtr& back() const { return items_.back(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::size_t trim() {
    std::size_t evicted = 0;
    while (items_.size() > capacity_) {
      items_.pop_front();
      ++evicted;
    }
    return evicted;
  }

  std::deque<TransitionPtr> items_;
  std::size_t capacity_;
};

/// B^S (routed by reached state) and B^G (routed by goal) of one cluster.
struct ClusterBufferPair {
  Fifo states;
  Fifo goals;

  explicit ClusterBufferPair(std::size_t capacity = 1) : states(capacity), goals(capacity) {}

  Fifo& of(BufferKind kind) { return kind == BufferKind::kState ? states : goals; }
  const Fifo& of(BufferKind kind) const { return kind == BufferKind::kState ? states : goals; }

  std::size_t set_capacity(std::size_t capacity) { return states.set_capacity(capacity) + goals.set_capacity(capacity); }
  std::size_t capacity() const { return states.capacity(); }
};

}  // namespace distop::store
