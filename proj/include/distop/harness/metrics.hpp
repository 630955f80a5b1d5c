#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "distop/common.hpp"
#include "distop/envs/gridworld.hpp"
#include "distop/repr/encoder.hpp"

namespace distop::harness {

/// Shannon entropy (natural log) of a histogram; 0 for an empty one.
template <class Count>
double visitation_entropy(const std::vector<Count>& hist) {
  double total = 0.0;
  for (Count c : hist) {
    if (c < 0) throw InvalidArgument("histogram counts must be non-negative");
    total += static_cast<double>(c);
  }
  if (total == 0.0) return 0.0;
  double h = 0.0;
  for (Count c : hist) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

/// 1-based ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("pearson: need two equal-length samples of size >= 2");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// Spearman rank correlation (Pearson correlation of average ranks).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

struct TopologyScore {
  std::size_t pairs = 0;
  double spearman = 0.0;
  double mean_adjacent = 0.0;    // mean embedding distance of BFS-distance-1 pairs
  double mean_far = 0.0;         // mean embedding distance of pairs at BFS distance >= far_threshold
  double far_over_adjacent = 0.0;
};

/// Compares embedding distances of every reachable free-cell pair with their BFS distance.
inline TopologyScore score_topology(const envs::GridWorld& env, const repr::EncoderParams& params, bool use_target,
                                    int far_threshold = 10) {
  const auto& cells = env.free_cells();
  const auto bfs = env.all_pairs_distances();
  Mat inputs(params.input_dim(), static_cast<Eigen::Index>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) inputs.col(static_cast<Eigen::Index>(i)) = repr::encoder_input(params, env.observation_of(cells[i]));
  const Mat emb = repr::encode_batch(params, inputs, use_target);

  TopologyScore s;
  std::vector<double> de, dg;
  double adj_sum = 0.0, far_sum = 0.0;
  long adj_n = 0, far_n = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      const int g = bfs[i][j];
      if (g < 0) continue;
      const double e = (emb.col(static_cast<Eigen::Index>(i)) - emb.col(static_cast<Eigen::Index>(j))).norm();
      de.push_back(e);
      dg.push_back(g);
      if (g == 1) {
        adj_sum += e;
        ++adj_n;
      } else if (g >= far_threshold) {
        far_sum += e;
        ++far_n;
      }
    }
  }
  s.pairs = de.size();
  if (s.pairs >= 2) s.spearman = spearman(de, dg);
  s.mean_adjacent = adj_n ? adj_sum / static_cast<double>(adj_n) : 0.0;
  s.mean_far = far_n ? far_sum / static_cast<double>(far_n) : 0.0;
  s.far_over_adjacent = s.mean_adjacent > 0.0 ? s.mean_far / s.mean_adjacent : 0.0;
  return s;
}

/// Newline-delimited JSON records, one object per line, flushed per record.
class MetricsWriter {
 public:
  MetricsWriter() = default;
  explicit MetricsWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open metrics file " + path);
  }
  void write(const nlohmann::ordered_json& record) {
    lines_.push_back(record.dump());
    if (out_.is_open()) {
      out_ << lines_.back() << '\n';
      out_.flush();
    }
  }
  const std::vector<std::string>& lines() const { return lines_; }

 private:
  std::ofstream out_;
  std::vector<std::string> lines_;
};

}  // namespace distop::harness
