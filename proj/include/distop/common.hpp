#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace distop {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raw observation produced by an environment.
using GroundState = Eigen::VectorXd;
/// Point in the learnt representation space R^d.
using EmbeddedState = Eigen::VectorXd;

using Rng = std::mt19937_64;

using NodeId = std::int64_t;
inline constexpr NodeId kNoNode = -1;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error taxonomy. The CLI maps these onto exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InvalidState : std::logic_error {
  using std::logic_error::logic_error;
};
/// Retryable: not enough data yet.
struct NotReady : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline Vec standard_normal(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

/// Draws an index from an (unnormalised) non-negative weight vector.
inline std::size_t sample_categorical(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw InvalidState("sample_categorical: weights sum to zero");
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  // Rounding can leave u marginally non-negative; return the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

/// n distinct draws from [0, population) excluding `excluded`.
inline std::vector<int> sample_distinct_excluding(Rng& rng, int population, int n, int excluded) {
  std::vector<int> pool;
  pool.reserve(static_cast<std::size_t>(population));
  for (int i = 0; i < population; ++i) {
    if (i != excluded) pool.push_back(i);
  }
  if (n > static_cast<int>(pool.size())) {
    throw InvalidArgument("sample_distinct_excluding: not enough candidates");
  }
  // Partial Fisher-Yates.
  for (int i = 0; i < n; ++i) {
    std::size_t j = static_cast<std::size_t>(i) + uniform_index(rng, pool.size() - static_cast<std::size_t>(i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(n));
  return pool;
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace distop
