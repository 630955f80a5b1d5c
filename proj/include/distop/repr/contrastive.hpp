#pragma once

#include <cmath>
#include <vector>

#include "distop/common.hpp"
#include "distop/repr/encoder.hpp"

namespace distop::repr {

struct ContrastiveConfig {
  double k = 1.0;            // similarity temperature
  double k_c = 20.0;         // distortion coefficient
  double delta = 0.1;        // distortion threshold
  double beta = 2.0;         // consistency coefficient
  int n_neg = 10;            // negatives per positive pair
  double alpha_slow = 0.001; // target smooth-update rate

  void validate() const {
    if (!(k > 0.0)) throw ConfigError("repr.k must be positive");
    if (!(k_c > 0.0)) throw ConfigError("repr.k_c must be positive");
    if (!(delta >= 0.0)) throw ConfigError("repr.delta must be non-negative");
    if (!(beta >= 0.0)) throw ConfigError("repr.beta must be non-negative");
    if (n_neg < 1) throw ConfigError("repr.n_neg must be at least 1");
    if (!(alpha_slow > 0.0 && alpha_slow < 1.0)) throw ConfigError("repr.alpha_slow must lie in (0, 1)");
  }
};

/// Consecutive pairs plus, per pair, indices of its negative states.
///
/// Negatives index into `negative_pool` when it is non-empty, otherwise into
/// `next_states` (the usual case: negatives are other next-states of the batch).
struct ContrastiveBatch {
  Mat states;       // input_dim x N, s_t
  Mat next_states;  // input_dim x N, s_{t+1}
  Mat negative_pool;
  std::vector<std::vector<int>> negatives;

  int size() const { return static_cast<int>(states.cols()); }
  bool uses_pool() const { return negative_pool.cols() > 0; }
};

/// For each of `batch_size` pairs, draws `n_neg` distinct other next-state indices.
inline std::vector<std::vector<int>> sample_negatives(Rng& rng, int batch_size, int n_neg) {
  if (n_neg > batch_size - 1) {
    throw InvalidArgument("n_neg must not exceed batch size - 1");
  }
  std::vector<std::vector<int>> out(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) out[static_cast<std::size_t>(i)] = sample_distinct_excluding(rng, batch_size, n_neg, i);
  return out;
}

struct ContrastiveLoss {
  double loss = 0.0;         // mean over pairs of the minimised objective
  double attraction = 0.0;   // mean k_c * relu(d - delta)
  double repulsion = 0.0;    // mean log(1 + sum f)
  double consistency = 0.0;  // mean beta * ||phi(s') - phi'(s')||^2
  nn::MlpGradients grads;    // w.r.t. online weights only
};

namespace detail {

inline void check_batch(const EncoderParams& params, const ContrastiveBatch& batch) {
  if (batch.size() == 0) throw InvalidArgument("contrastive batch is empty");
  if (batch.next_states.cols() != batch.states.cols()) throw InvalidArgument("states/next_states size mismatch");
  if (static_cast<int>(batch.negatives.size()) != batch.size()) throw InvalidArgument("one negative list per pair required");
  if (batch.states.rows() != params.input_dim()) throw ConfigError("state dimension does not match encoder input");
  const int pool = batch.uses_pool() ? static_cast<int>(batch.negative_pool.cols()) : batch.size();
  for (const auto& negs : batch.negatives) {
    for (int j : negs) {
      if (j < 0 || j >= pool) throw InvalidArgument("negative index out of range");
    }
  }
}

// Online-encoder inputs stacked as [states | next_states | pool].
inline Mat stacked_inputs(const ContrastiveBatch& batch) {
  const Eigen::Index n = batch.states.cols();
  const Eigen::Index p = batch.uses_pool() ? batch.negative_pool.cols() : 0;
  Mat x(batch.states.rows(), 2 * n + p);
  x.leftCols(n) = batch.states;
  x.middleCols(n, n) = batch.next_states;
  if (p > 0) x.rightCols(p) = batch.negative_pool;
  return x;
}

inline Eigen::Index negative_column(const ContrastiveBatch& batch, int j) {
  return batch.uses_pool() ? 2 * batch.states.cols() + j : batch.states.cols() + j;
}

}  // namespace detail

/// Penalised contrastive objective, minimised:
///   mean_i [ k_c relu(||a_i - b_i|| - delta) + log(1 + sum_j exp(-k ||n_j - b_i||)) + beta ||b_i - b'_i||^2 ]
/// with a = phi(s_t), b = phi(s_{t+1}), n = phi(negatives), b' = target(s_{t+1}).
/// Norm gradients at exactly zero distance use the zero subgradient.
inline ContrastiveLoss distop_loss(const EncoderParams& params, const ContrastiveConfig& cfg, const ContrastiveBatch& batch) {
  detail::check_batch(params, batch);
  const Eigen::Index n = batch.states.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  nn::Mlp::Tape tape;
  const Mat emb = params.online.forward(detail::stacked_inputs(batch), tape);
  const Mat target_next = params.target.forward(batch.next_states);
  Mat d_emb = Mat::Zero(emb.rows(), emb.cols());

  ContrastiveLoss out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = emb.col(i);
    const auto b = emb.col(n + i);

    const Vec u = a - b;
    const double dist = u.norm();
    if (dist > cfg.delta) {
      out.attraction += cfg.k_c * (dist - cfg.delta);
      const Vec g = (cfg.k_c * inv_n / dist) * u;
      d_emb.col(i) += g;
      d_emb.col(n + i) -= g;
    }

    double sum = 0.0;
    const auto& negs = batch.negatives[static_cast<std::size_t>(i)];
    std::vector<double> f(negs.size());
    std::vector<double> dj(negs.size());
    for (std::size_t q = 0; q < negs.size(); ++q) {
      dj[q] = (emb.col(detail::negative_column(batch, negs[q])) - b).norm();
      f[q] = std::exp(-cfg.k * dj[q]);
      sum += f[q];
    }
    out.repulsion += std::log1p(sum);
    for (std::size_t q = 0; q < negs.size(); ++q) {
      if (dj[q] == 0.0) continue;
      const Eigen::Index col = detail::negative_column(batch, negs[q]);
      const Vec v = emb.col(col) - b;
      const Vec g = (-cfg.k * f[q] / (1.0 + sum) * inv_n / dj[q]) * v;
      d_emb.col(col) += g;
      d_emb.col(n + i) -= g;
    }

    const Vec w = b - target_next.col(i);
    out.consistency += cfg.beta * w.squaredNorm();
    d_emb.col(n + i) += (2.0 * cfg.beta * inv_n) * w;
  }
  out.attraction *= inv_n;
  out.repulsion *= inv_n;
  out.consistency *= inv_n;
  out.loss = out.attraction + out.repulsion + out.consistency;

  out.grads = params.online.zero_gradients();
  params.online.backward(tape, d_emb, out.grads, false);
  return out;
}

struct BoundCheck {
  double lhs = 0.0;  // exact local InfoNCE, mean over pairs
  double rhs = 0.0;  // its lower bound, mean over pairs
  std::vector<double> lhs_terms;
  std::vector<double> rhs_terms;
};

/// Local InfoNCE and the bound obtained by replacing the positive similarity
/// in the denominator with 1. The denominator ranges over the positive and
/// the pair's negatives, so rhs <= lhs pair by pair.
inline BoundCheck infonce_bound_check(const EncoderParams& params, const ContrastiveBatch& batch, double k) {
  detail::check_batch(params, batch);
  const Eigen::Index n = batch.states.cols();
  const Mat emb = params.online.forward(detail::stacked_inputs(batch));
  BoundCheck out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pos_dist = (emb.col(i) - emb.col(n + i)).norm();
    // 1 - f(s_t, s_{t+1}), computed without cancellation.
    const double pos_gap = -std::expm1(-k * pos_dist);
    double sum = 0.0;
    for (int j : batch.negatives[static_cast<std::size_t>(i)]) {
      sum += std::exp(-k * (emb.col(detail::negative_column(batch, j)) - emb.col(n + i)).norm());
    }
    const double lhs = -k * pos_dist - std::log1p(sum - pos_gap);
    const double rhs = -k * pos_dist - std::log1p(sum);
    out.lhs_terms.push_back(lhs);
    out.rhs_terms.push_back(rhs);
    out.lhs += lhs;
    out.rhs += rhs;
  }
  out.lhs /= static_cast<double>(n);
  out.rhs /= static_cast<double>(n);
  return out;
}

}  // namespace distop::repr
