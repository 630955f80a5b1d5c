#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "distop/topology/graph.hpp"

namespace distop::topology {

// Line-oriented graph format:
//   distop-topology 1
//   dim <d>
//   node <id> <error_count> <selection_count> <count> <ext_value> <w_1> ... <w_d>
//   edge <id_a> <id_b> <age>
// Readers skip record kinds they do not know, so exports may append extra sections.

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_graph(std::ostream& out, const TopologyGraph& g) {
  out << "distop-topology 1\n";
  out << "dim " << g.dim() << "\n";
  for (const auto& n : g.nodes()) {
    out << "node " << n.id << ' ' << n.error_count << ' ' << n.selection_count << ' ' << n.count() << ' '
        << format_double(n.ext_value);
    for (Eigen::Index i = 0; i < n.w.size(); ++i) out << ' ' << format_double(n.w[i]);
    out << '\n';
  }
  for (const auto& [key, age] : g.edges()) out << "edge " << key.first << ' ' << key.second << ' ' << age << '\n';
}

inline std::string graph_to_string(const TopologyGraph& g) {
  std::ostringstream os;
  write_graph(os, g);
  return os.str();
}

/// Buffers are not part of the format; loaded nodes start with empty buffers.
inline TopologyGraph read_graph(std::istream& in, OegnConfig cfg = {}) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("distop-topology", 0) != 0) {
    throw InvalidArgument("missing topology header");
  }
  int dim = -1;
  TopologyGraph g;
  bool have_graph = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "dim") {
      ls >> dim;
      g = TopologyGraph(cfg, dim);
      have_graph = true;
    } else if (kind == "node") {
      if (!have_graph) throw InvalidArgument("node record before dim");
      NodeId id;
      long err, sel;
      std::size_t count;
      std::string ext;
      ls >> id >> err >> sel >> count >> ext;
      Vec w(dim);
      for (int i = 0; i < dim; ++i) {
        std::string v;
        ls >> v;
        w[i] = std::stod(v);
      }
      if (!ls) throw InvalidArgument("malformed node record: " + line);
      g.restore_node(id, w, err, sel, std::stod(ext));
    } else if (kind == "edge") {
      NodeId a, b;
      int age;
      ls >> a >> b >> age;
      if (!ls) throw InvalidArgument("malformed edge record: " + line);
      g.set_edge(a, b, age);
    }
  }
  if (!have_graph) throw InvalidArgument("missing dim record");
  return g;
}

inline TopologyGraph graph_from_string(const std::string& text, OegnConfig cfg = {}) {
  std::istringstream is(text);
  return read_graph(is, std::move(cfg));
}

/// Same ids, vectors, counters and edges (buffers excluded).
inline bool same_structure(const TopologyGraph& a, const TopologyGraph& b) {
  if (a.dim() != b.dim() || a.size() != b.size() || a.edges() != b.edges()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.nodes()[i];
    const auto& y = b.nodes()[i];
    if (x.id != y.id || x.w != y.w || x.error_count != y.error_count || x.selection_count != y.selection_count ||
        x.ext_value != y.ext_value) {
      return false;
    }
  }
  return true;
}

}  // namespace distop::topology
