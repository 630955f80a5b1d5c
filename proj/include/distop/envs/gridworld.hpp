#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "distop/common.hpp"
#include "distop/envs/grid_map.hpp"

namespace distop::envs {

enum class ObservationMode { kOneHot, kXY };
enum class ResetMode { kUniformFree, kFixedStart };
enum class GridReward { kNone, kSparseGoal };

inline std::string to_string(ObservationMode m) { return m == ObservationMode::kOneHot ? "one_hot_binary" : "xy_coords"; }
inline ObservationMode observation_mode_from_string(const std::string& s) {
  if (s == "one_hot_binary") return ObservationMode::kOneHot;
  if (s == "xy_coords") return ObservationMode::kXY;
  throw ConfigError("unknown observation mode '" + s + "' (expected one_hot_binary or xy_coords)");
}
inline std::string to_string(ResetMode m) { return m == ResetMode::kUniformFree ? "uniform_free" : "fixed_start"; }
inline ResetMode reset_mode_from_string(const std::string& s) {
  if (s == "uniform_free") return ResetMode::kUniformFree;
  if (s == "fixed_start") return ResetMode::kFixedStart;
  throw ConfigError("unknown reset mode '" + s + "' (expected uniform_free or fixed_start)");
}

struct StepResult {
  GroundState observation;
  double reward = 0.0;
  bool done = false;      // horizon reached
  bool terminal = false;  // true environment termination (never for these tasks)
};

struct GridWorldConfig {
  ObservationMode observation = ObservationMode::kOneHot;
  ResetMode reset = ResetMode::kUniformFree;
  GridReward reward = GridReward::kNone;
  int horizon = 50;
};

/// Four-connected gridworld. Actions: 0 up, 1 down, 2 left, 3 right. Moving
/// into a wall leaves the agent in place.
class GridWorld {
 public:
  static constexpr int kNumActions = 4;
  static constexpr std::array<int, 4> kDRow = {-1, 1, 0, 0};
  static constexpr std::array<int, 4> kDCol = {0, 0, -1, 1};

  GridWorld(GridMap map, GridWorldConfig cfg) : map_(std::move(map)), cfg_(cfg) {
    if (cfg_.horizon < 1) throw ConfigError("gridworld horizon must be positive");
    if (cfg_.reset == ResetMode::kFixedStart && !map_.start) throw ConfigError("fixed_start reset needs an 'S' cell");
    if (cfg_.reward == GridReward::kSparseGoal && !map_.goal) throw ConfigError("sparse goal reward needs a 'G' cell");
    free_ = map_.free_cells();
    free_index_.assign(static_cast<std::size_t>(map_.width * map_.height), -1);
    for (std::size_t i = 0; i < free_.size(); ++i) free_index_[static_cast<std::size_t>(map_.index(free_[i]))] = static_cast<int>(i);
    agent_ = map_.start.value_or(free_.front());
  }

  const GridMap& map() const { return map_; }
  const GridWorldConfig& config() const { return cfg_; }
  int horizon() const { return cfg_.horizon; }
  int t() const { return t_; }
  Cell agent() const { return agent_; }

  int observation_dim() const { return cfg_.observation == ObservationMode::kOneHot ? map_.width * map_.height : 2; }
  /// Leading observation components the encoder consumes.
  int encoder_input_dim() const { return observation_dim(); }

  bool discrete() const { return true; }
  int num_actions() const { return kNumActions; }
  int action_dim() const { return 1; }
  Vec random_action(Rng& rng) const {
    Vec a(1);
    a[0] = static_cast<double>(uniform_index(rng, kNumActions));
    return a;
  }
  long clipped_actions() const { return clipped_; }

  /// Visitation cells are the map's row-major indices.
  int num_cells() const { return map_.width * map_.height; }
  int cell_index() const { return map_.index(agent_); }
  const std::vector<Cell>& free_cells() const { return free_; }
  /// Position among free_cells(), or -1 for a wall.
  int free_index(Cell c) const { return free_index_[static_cast<std::size_t>(map_.index(c))]; }

  GroundState observation_of(Cell c) const {
    if (cfg_.observation == ObservationMode::kOneHot) {
      Vec o = Vec::Zero(observation_dim());
      o[map_.index(c)] = 1.0;
      return o;
    }
    Vec o(2);
    o[0] = map_.width > 1 ? 2.0 * c.col / (map_.width - 1) - 1.0 : 0.0;
    o[1] = map_.height > 1 ? 2.0 * c.row / (map_.height - 1) - 1.0 : 0.0;
    return o;
  }
  GroundState observation() const { return observation_of(agent_); }

  /// Recovers the cell from a one-hot observation.
  Cell cell_of_observation(const GroundState& o) const {
    if (cfg_.observation != ObservationMode::kOneHot) throw InvalidArgument("cell_of_observation needs one-hot observations");
    Eigen::Index i = 0;
    o.maxCoeff(&i);
    return map_.cell(static_cast<int>(i));
  }

  GroundState reset(Rng& rng) {
    t_ = 0;
    if (cfg_.reset == ResetMode::kFixedStart) {
      agent_ = *map_.start;
    } else {
      agent_ = free_[uniform_index(rng, free_.size())];
    }
    return observation();
  }

  /// Deterministic successor cell.
  Cell next_cell(Cell c, int action) const {
    const Cell n{c.row + kDRow[static_cast<std::size_t>(action)], c.col + kDCol[static_cast<std::size_t>(action)]};
    return map_.wall(n.row, n.col) ? c : n;
  }

  static int opposite(int action) { return action ^ 1; }

  StepResult step(const Vec& action) {
    if (action.size() != 1) throw InvalidArgument("gridworld action must hold one index");
    double v = action[0];
    if (!std::isfinite(v)) v = 0.0;
    int a = static_cast<int>(std::lround(v));
    if (a < 0 || a >= kNumActions || v != std::floor(v)) {
      ++clipped_;
      a = std::clamp(a, 0, kNumActions - 1);
    }
    agent_ = next_cell(agent_, a);
    ++t_;
    StepResult r;
    r.observation = observation();
    if (cfg_.reward == GridReward::kSparseGoal) r.reward = agent_ == *map_.goal ? 0.0 : -1.0;
    r.done = t_ >= cfg_.horizon;
    return r;
  }

  /// BFS distances from one cell to every cell (-1 for walls and unreachable cells), map-indexed.
  std::vector<int> bfs_from(Cell source) const {
    std::vector<int> dist(static_cast<std::size_t>(num_cells()), -1);
    if (map_.wall(source.row, source.col)) return dist;
    std::deque<Cell> q{source};
    dist[static_cast<std::size_t>(map_.index(source))] = 0;
    while (!q.empty()) {
      const Cell c = q.front();
      q.pop_front();
      const int d = dist[static_cast<std::size_t>(map_.index(c))];
      for (int a = 0; a < kNumActions; ++a) {
        const Cell n = next_cell(c, a);
        auto& slot = dist[static_cast<std::size_t>(map_.index(n))];
        if (slot < 0) {
          slot = d + 1;
          q.push_back(n);
        }
      }
    }
    return dist;
  }

  /// All-pairs shortest-path distances over free cells, indexed like free_cells().
  std::vector<std::vector<int>> all_pairs_distances() const {
    std::vector<std::vector<int>> out;
    out.reserve(free_.size());
    for (const Cell& c : free_) {
      const auto d = bfs_from(c);
      std::vector<int> row(free_.size());
      for (std::size_t j = 0; j < free_.size(); ++j) row[j] = d[static_cast<std::size_t>(map_.index(free_[j]))];
      out.push_back(std::move(row));
    }
    return out;
  }

 private:
  GridMap map_;
  GridWorldConfig cfg_;
  std::vector<Cell> free_;
  std::vector<int> free_index_;
  Cell agent_;
  int t_ = 0;
  long clipped_ = 0;
};

}  // namespace distop::envs
