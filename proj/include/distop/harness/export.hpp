#pragma once

#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "distop/envs/gridworld.hpp"
#include "distop/repr/encoder.hpp"
#include "distop/topology/text_format.hpp"

namespace distop::harness {

// Gridworld snapshots extend the graph format with
//   cell <free_index> <row> <col> <e_1> ... <e_d>
//   adj <free_index_a> <free_index_b>                (one-step neighbours, a < b)

inline void write_topology_snapshot(std::ostream& out, const topology::TopologyGraph& graph) {
  if (graph.empty()) throw InvalidArgument("cannot export an empty graph");
  topology::write_graph(out, graph);
}

inline void write_topology_snapshot(std::ostream& out, const topology::TopologyGraph& graph,
                                    const repr::EncoderParams& params, const envs::GridWorld& env,
                                    bool use_target = true) {
  write_topology_snapshot(out, graph);
  const auto& cells = env.free_cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const EmbeddedState e = repr::encode(params, repr::encoder_input(params, env.observation_of(cells[i])), use_target);
    out << "cell " << i << ' ' << cells[i].row << ' ' << cells[i].col;
    for (Eigen::Index k = 0; k < e.size(); ++k) out << ' ' << topology::format_double(e[k]);
    out << '\n';
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (int a = 0; a < envs::GridWorld::kNumActions; ++a) {
      const envs::Cell n = env.next_cell(cells[i], a);
      const int j = env.free_index(n);
      if (j > static_cast<int>(i)) out << "adj " << i << ' ' << j << '\n';
    }
  }
}

template <class... Extra>
void export_topology_snapshot(const std::string& path, const topology::TopologyGraph& graph, const Extra&... extra) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_topology_snapshot(out, graph, extra...);
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace distop::harness
