#pragma once

#include <string>
#include <vector>

#include "distop/common.hpp"
#include "distop/nn/adam.hpp"
#include "distop/nn/checkpoint.hpp"
#include "distop/nn/mlp.hpp"
#include "distop/repr/encoder.hpp"

namespace distop::policy {

struct SacConfig {
  std::vector<int> hidden = {128, 128};
  nn::Activation activation = nn::Activation::kSilu;
  double learning_rate = 5e-4;
  double gamma = 0.99;
  double entropy_scale = 0.2;
  /// Smooth update of the target critics.
  double tau = 0.005;

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("sac.gamma must lie in [0, 1)");
    if (!(entropy_scale > 0.0)) throw ConfigError("sac.entropy_scale must be positive");
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("sac.smooth_update must lie in (0, 1)");
    if (!(learning_rate > 0.0)) throw ConfigError("sac.learning_rate must be positive");
    for (int h : hidden) {
      if (h <= 0) throw ConfigError("sac.neurons must be positive");
    }
  }
};

/// Column-wise batch of (state, goal, action, next_state, reward, terminal).
/// `terminal` marks true environment terminations only; time-limit ends are not terminal.
struct AgentBatch {
  Mat states;
  Mat goals;  // d x B; zero rows for a goal-free (flat) agent
  Mat actions;
  Mat next_states;
  Vec rewards;
  Vec terminal;

  Eigen::Index size() const { return states.cols(); }

  Mat inputs() const { return stack(states, goals); }
  Mat next_inputs() const { return stack(next_states, goals); }

  static Mat stack(const Mat& top, const Mat& bottom) {
    Mat x(top.rows() + bottom.rows(), top.cols());
    x.topRows(top.rows()) = top;
    if (bottom.rows() > 0) x.bottomRows(bottom.rows()) = bottom;
    return x;
  }
};

struct AgentLosses {
  double critic1 = 0.0;
  double critic2 = 0.0;
  double actor = 0.0;
  double mean_q = 0.0;
  double entropy = 0.0;
};

inline Vec concat(const Vec& a, const Vec& b) {
  Vec x(a.size() + b.size());
  x << a, b;
  return x;
}

inline void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericalAbort("non-finite " + what);
}

/// -||target(next_state) - g||_2
inline double intrinsic_reward(const repr::EncoderParams& params, const GroundState& next_state, const EmbeddedState& g) {
  if (g.size() != params.embedding_dim()) throw InvalidArgument("goal embedding has the wrong dimension");
  return -(repr::embed_target(params, next_state) - g).norm();
}

/// Batched form over columns (next_states and goal embeddings).
inline Vec intrinsic_rewards(const repr::EncoderParams& params, const Mat& next_states, const Mat& goal_embeddings) {
  const Mat emb = repr::encode_batch(params, repr::encoder_inputs(params, next_states), true);
  return -(emb - goal_embeddings).colwise().norm().transpose();
}

}  // namespace distop::policy
