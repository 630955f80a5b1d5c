#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "distop/common.hpp"
#include "distop/envs/grid_map.hpp"
#include "distop/envs/gridworld.hpp"

namespace distop::envs {

struct PointMazeConfig {
  int horizon = 200;
  double speed = 0.2;             // cells per step at full forward action
  double radius = 0.1;            // agent body radius in cells
  double goal_threshold = 1.5;    // reward 0 when closer than this to the goal centre
  double start_jitter = 0.1;      // uniform jitter on the start position, in cells
  double max_rotation = 0.25;
};

/// Kinematic point agent in a cell map. Position is continuous, in cell units
/// with x along columns and y along rows; cell (r, c) spans [c, c+1) x [r, r+1).
/// Observation: (x, y) scaled to [-1, 1], cos(heading), sin(heading).
/// Action: (forward in [-1, 1], rotation in [-max_rotation, max_rotation]).
class PointMaze {
 public:
  PointMaze(GridMap map, PointMazeConfig cfg) : map_(std::move(map)), cfg_(cfg) {
    if (!map_.start || !map_.goal) throw ConfigError("point maze needs 'S' and 'G' cells");
    if (cfg_.horizon < 1) throw ConfigError("maze.horizon must be positive");
    if (!(cfg_.speed > 0.0)) throw ConfigError("maze.speed must be positive");
    if (!(cfg_.radius >= 0.0 && cfg_.radius < 0.5)) throw ConfigError("maze.radius must lie in [0, 0.5)");
    if (!(cfg_.goal_threshold > 0.0)) throw ConfigError("maze.goal_threshold must be positive");
    if (!(cfg_.start_jitter >= 0.0 && cfg_.start_jitter + cfg_.radius < 0.5)) throw ConfigError("maze.start_jitter too large");
    if (!(cfg_.max_rotation > 0.0)) throw ConfigError("maze.max_rotation must be positive");
    low_ = Vec(2);
    high_ = Vec(2);
    low_ << -1.0, -cfg_.max_rotation;
    high_ << 1.0, cfg_.max_rotation;
    place_at_start(0.0, 0.0, 0.0);
  }

  const GridMap& map() const { return map_; }
  const PointMazeConfig& config() const { return cfg_; }
  int horizon() const { return cfg_.horizon; }
  int t() const { return t_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double heading() const { return heading_; }

  int observation_dim() const { return 4; }
  int encoder_input_dim() const { return 2; }
  bool discrete() const { return false; }
  int action_dim() const { return 2; }
  const Vec& action_low() const { return low_; }
  const Vec& action_high() const { return high_; }
  long clipped_actions() const { return clipped_; }

  Vec random_action(Rng& rng) const {
    Vec a(2);
    for (int i = 0; i < 2; ++i) a[i] = low_[i] + (high_[i] - low_[i]) * uniform01(rng);
    return a;
  }

  int num_cells() const { return map_.width * map_.height; }
  int cell_index() const {
    const int c = std::clamp(static_cast<int>(std::floor(x_)), 0, map_.width - 1);
    const int r = std::clamp(static_cast<int>(std::floor(y_)), 0, map_.height - 1);
    return r * map_.width + c;
  }

  double goal_x() const { return map_.goal->col + 0.5; }
  double goal_y() const { return map_.goal->row + 0.5; }
  double distance_to_goal() const { return std::hypot(x_ - goal_x(), y_ - goal_y()); }

  GroundState observation_at(double x, double y, double heading) const {
    Vec o(4);
    o << 2.0 * x / map_.width - 1.0, 2.0 * y / map_.height - 1.0, std::cos(heading), std::sin(heading);
    return o;
  }
  GroundState observation() const { return observation_at(x_, y_, heading_); }
  /// Observation of an agent standing at the goal centre.
  GroundState goal_observation() const { return observation_at(goal_x(), goal_y(), 0.0); }

  GroundState reset(Rng& rng) {
    const double jx = cfg_.start_jitter * (2.0 * uniform01(rng) - 1.0);
    const double jy = cfg_.start_jitter * (2.0 * uniform01(rng) - 1.0);
    const double h = std::numbers::pi * (2.0 * uniform01(rng) - 1.0);
    place_at_start(jx, jy, h);
    return observation();
  }

  /// Sets the pose directly; the position must be free.
  void set_pose(double x, double y, double heading) {
    if (!free(x, y)) throw InvalidArgument("pose collides with a wall");
    x_ = x;
    y_ = y;
    heading_ = wrap(heading);
    t_ = 0;
  }

  bool free(double x, double y) const {
    const double r = cfg_.radius;
    for (double dx : {-r, r}) {
      for (double dy : {-r, r}) {
        if (map_.wall(static_cast<int>(std::floor(y + dy)), static_cast<int>(std::floor(x + dx)))) return false;
      }
    }
    return true;
  }

  StepResult step(const Vec& action) {
    if (action.size() != 2) throw InvalidArgument("maze action must have two components");
    Vec a = action;
    bool clipped = false;
    for (int i = 0; i < 2; ++i) {
      if (!std::isfinite(a[i])) {
        a[i] = 0.0;
        clipped = true;
      } else if (a[i] < low_[i] || a[i] > high_[i]) {
        a[i] = std::clamp(a[i], low_[i], high_[i]);
        clipped = true;
      }
    }
    if (clipped) ++clipped_;

    heading_ = wrap(heading_ + a[1]);
    const double dx = a[0] * cfg_.speed * std::cos(heading_);
    const double dy = a[0] * cfg_.speed * std::sin(heading_);
    // Full move, else slide along one axis, else stay.
    if (free(x_ + dx, y_ + dy)) {
      x_ += dx;
      y_ += dy;
    } else if (free(x_ + dx, y_)) {
      x_ += dx;
    } else if (free(x_, y_ + dy)) {
      y_ += dy;
    }
    ++t_;
    StepResult r;
    r.observation = observation();
    r.reward = distance_to_goal() < cfg_.goal_threshold ? 0.0 : -1.0;
    r.done = t_ >= cfg_.horizon;
    return r;
  }

 private:
  static double wrap(double h) { return std::remainder(h, 2.0 * std::numbers::pi); }

  void place_at_start(double jx, double jy, double heading) {
    x_ = map_.start->col + 0.5 + jx;
    y_ = map_.start->row + 0.5 + jy;
    heading_ = wrap(heading);
    t_ = 0;
  }

  GridMap map_;
  PointMazeConfig cfg_;
  Vec low_, high_;
  double x_ = 0.0, y_ = 0.0, heading_ = 0.0;
  int t_ = 0;
  long clipped_ = 0;
};

}  // namespace distop::envs
