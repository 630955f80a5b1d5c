#pragma once

// Reference implementations used only by tests, acceptance checks and the
// unit-oracles recipe. Nothing in the library proper includes this header.
// Everything here is written with plain scalar loops so that it shares no
// code path with the vectorised implementations it checks.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "distop/common.hpp"
#include "distop/envs/gridworld.hpp"
#include "distop/nn/mlp.hpp"
#include "distop/repr/contrastive.hpp"
#include "distop/topology/graph.hpp"

namespace distop::oracles {

/// Entries uniform in [-1, 1].
inline Mat random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng);
  }
  return m;
}

inline double activate_scalar(nn::Activation a, double z) {
  switch (a) {
    case nn::Activation::kIdentity: return z;
    case nn::Activation::kTanh: return std::tanh(z);
    case nn::Activation::kSilu: return z / (1.0 + std::exp(-z));
    case nn::Activation::kRelu: return z > 0.0 ? z : 0.0;
  }
  return z;
}

/// Single-sample forward pass with explicit loops.
inline std::vector<double> forward_scalar(const nn::Mlp& net, const std::vector<double>& x) {
  std::vector<double> h = x;
  const auto& layers = net.layers();
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& l = layers[li];
    if (static_cast<Eigen::Index>(h.size()) != l.weight.cols()) throw InvalidArgument("forward_scalar: input size");
    const nn::Activation act = li + 1 == layers.size() ? net.output_activation() : net.hidden_activation();
    std::vector<double> out(static_cast<std::size_t>(l.weight.rows()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      double z = l.bias[r];
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) z += l.weight(r, c) * h[static_cast<std::size_t>(c)];
      out[static_cast<std::size_t>(r)] = activate_scalar(act, z);
    }
    h = std::move(out);
  }
  return h;
}

inline std::vector<double> column(const Mat& m, Eigen::Index c) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) v[static_cast<std::size_t>(r)] = m(r, c);
  return v;
}

inline double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// The penalised contrastive loss written directly from its definition.
inline double reference_contrastive_loss(const repr::EncoderParams& p, const repr::ContrastiveConfig& cfg,
                                         const repr::ContrastiveBatch& batch) {
  const Eigen::Index n = batch.states.cols();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = forward_scalar(p.online, column(batch.states, i));
    const auto b = forward_scalar(p.online, column(batch.next_states, i));
    const auto bt = forward_scalar(p.target, column(batch.next_states, i));
    const double attraction = cfg.k_c * std::max(0.0, l2(a, b) - cfg.delta);
    double sum = 0.0;
    for (int j : batch.negatives[static_cast<std::size_t>(i)]) {
      const Mat& src = batch.uses_pool() ? batch.negative_pool : batch.next_states;
      sum += std::exp(-cfg.k * l2(forward_scalar(p.online, column(src, j)), b));
    }
    const double consistency = cfg.beta * l2(b, bt) * l2(b, bt);
    total += attraction + std::log(1.0 + sum) + consistency;
  }
  return total / static_cast<double>(n);
}

/// Exact local InfoNCE (positive plus the pair's negatives in the denominator), mean over pairs.
inline double reference_local_infonce(const repr::EncoderParams& p, const repr::ContrastiveBatch& batch, double k) {
  const Eigen::Index n = batch.states.cols();
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = forward_scalar(p.online, column(batch.states, i));
    const auto b = forward_scalar(p.online, column(batch.next_states, i));
    const long double pos = std::exp(-static_cast<long double>(k) * l2(a, b));
    long double denom = pos;
    for (int j : batch.negatives[static_cast<std::size_t>(i)]) {
      const Mat& src = batch.uses_pool() ? batch.negative_pool : batch.next_states;
      denom += std::exp(-static_cast<long double>(k) * l2(forward_scalar(p.online, column(src, j)), b));
    }
    total += std::log(pos / denom);
  }
  return static_cast<double>(total / n);
}

/// 0.5 * mean (Q(x_b)[row_b] - y_b)^2 over the batch, where Q is a network and
/// `rows` picks the output (all zero for a single-output critic).
inline double reference_critic_loss(const nn::Mlp& critic, const Mat& inputs, const std::vector<int>& rows, const Vec& y) {
  double total = 0.0;
  for (Eigen::Index b = 0; b < inputs.cols(); ++b) {
    const auto q = forward_scalar(critic, column(inputs, b));
    const double d = q[static_cast<std::size_t>(rows[static_cast<std::size_t>(b)])] - y[b];
    total += 0.5 * d * d;
  }
  return total / static_cast<double>(inputs.cols());
}

/// Central finite differences of `loss` with respect to every parameter of `net`.
/// `net` is perturbed in place and restored.
inline std::vector<Vec> finite_difference_gradient(nn::Mlp& net, const std::function<double()>& loss, double h = 1e-5) {
  std::vector<Vec> out;
  net.for_each_tensor([&](const std::string&, double* data, Eigen::Index size) {
    Vec g(size);
    for (Eigen::Index i = 0; i < size; ++i) {
      const double keep = data[i];
      data[i] = keep + h;
      const double up = loss();
      data[i] = keep - h;
      const double down = loss();
      data[i] = keep;
      g[i] = (up - down) / (2.0 * h);
    }
    out.push_back(std::move(g));
  });
  return out;
}

/// Flattens analytic gradients into the same per-tensor order as finite_difference_gradient.
inline std::vector<Vec> flatten(const nn::MlpGradients& g) {
  std::vector<Vec> out;
  for (const auto& l : g.layers) {
    out.push_back(Eigen::Map<const Vec>(l.weight.data(), l.weight.size()));
    out.push_back(l.bias);
  }
  return out;
}

/// max over tensors of ||a - n|| / max(||a||, ||n||, 1e-12).
inline double max_relative_error(const std::vector<Vec>& analytic, const std::vector<Vec>& numeric) {
  if (analytic.size() != numeric.size()) throw InvalidArgument("gradient tensor counts differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({analytic[i].norm(), numeric[i].norm(), 1e-12});
    worst = std::max(worst, (analytic[i] - numeric[i]).norm() / scale);
  }
  return worst;
}

/// p(c) = count^exponent / sum over non-empty clusters, in long double.
inline std::vector<double> reference_skewed(const std::vector<long>& counts, double exponent) {
  long double total = 0.0L;
  for (long c : counts) {
    if (c > 0) total += std::pow(static_cast<long double>(c), static_cast<long double>(exponent));
  }
  std::vector<double> p(counts.size(), 0.0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) p[i] = static_cast<double>(std::pow(static_cast<long double>(counts[i]), static_cast<long double>(exponent)) / total);
  }
  return p;
}

/// Nearest node by exhaustive search (lowest id on ties).
inline NodeId brute_force_nearest(const topology::TopologyGraph& g, const EmbeddedState& e) {
  NodeId best = kNoNode;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& n : g.nodes()) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) d += (n.w[i] - e[i]) * (n.w[i] - e[i]);
    if (d < best_d || (d == best_d && n.id < best)) {
      best_d = d;
      best = n.id;
    }
  }
  return best;
}

/// Uniform-action random-walk transition matrix over free cells (indexed like free_cells()).
inline Mat random_walk_matrix(const envs::GridWorld& env) {
  const auto& cells = env.free_cells();
  const auto n = static_cast<Eigen::Index>(cells.size());
  Mat p = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int a = 0; a < envs::GridWorld::kNumActions; ++a) {
      const int j = env.free_index(env.next_cell(cells[static_cast<std::size_t>(i)], a));
      p(i, j) += 1.0 / envs::GridWorld::kNumActions;
    }
  }
  return p;
}

/// Stationary distribution by power iteration from the uniform distribution.
inline Vec stationary_distribution(const Mat& p, int iterations = 100000, double tol = 1e-14) {
  Vec pi = Vec::Constant(p.rows(), 1.0 / static_cast<double>(p.rows()));
  for (int it = 0; it < iterations; ++it) {
    Vec next = p.transpose() * pi;
    next = 0.5 * (next + pi);  // lazy chain: same fixed point, no periodicity
    const double change = (next - pi).lpNorm<1>();
    pi = next;
    if (change < tol) break;
  }
  return pi / pi.sum();
}

inline double total_variation(const Vec& p, const Vec& q) { return 0.5 * (p - q).lpNorm<1>(); }

/// All-pairs shortest paths over free cells by Floyd-Warshall (-1 when unreachable).
inline std::vector<std::vector<int>> floyd_warshall(const envs::GridWorld& env) {
  const auto& cells = env.free_cells();
  const std::size_t n = cells.size();
  const int inf = std::numeric_limits<int>::max() / 4;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (int a = 0; a < envs::GridWorld::kNumActions; ++a) {
      const int j = env.free_index(env.next_cell(cells[i], a));
      if (static_cast<std::size_t>(j) != i) d[i][static_cast<std::size_t>(j)] = 1;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
      }
    }
  }
  for (auto& row : d) {
    for (int& v : row) {
      if (v >= inf) v = -1;
    }
  }
  return d;
}

}  // namespace distop::oracles
