#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "distop/common.hpp"

namespace distop::envs {

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

/// Plain-text layout: '#' wall, '.' free, 'S' start, 'G' goal. Rows are lines;
/// all rows must have the same width.
struct GridMap {
  int width = 0;
  int height = 0;
  std::vector<bool> walls;  // row-major
  std::optional<Cell> start;
  std::optional<Cell> goal;

  bool wall(int row, int col) const {
    if (row < 0 || col < 0 || row >= height || col >= width) return true;
    return walls[static_cast<std::size_t>(row * width + col)];
  }
  int index(Cell c) const { return c.row * width + c.col; }
  Cell cell(int index) const { return {index / width, index % width}; }

  std::vector<Cell> free_cells() const {
    std::vector<Cell> out;
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        if (!wall(r, c)) out.push_back({r, c});
      }
    }
    return out;
  }
};

inline GridMap parse_grid_map(const std::string& text) {
  GridMap m;
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
  }
  if (rows.empty()) throw ConfigError("grid map is empty");
  m.height = static_cast<int>(rows.size());
  m.width = static_cast<int>(rows.front().size());
  for (int r = 0; r < m.height; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != m.width) throw ConfigError("grid map rows have different widths");
    for (int c = 0; c < m.width; ++c) {
      const char ch = row[static_cast<std::size_t>(c)];
      switch (ch) {
        case '#': m.walls.push_back(true); break;
        case '.': m.walls.push_back(false); break;
        case 'S':
          m.walls.push_back(false);
          m.start = Cell{r, c};
          break;
        case 'G':
          m.walls.push_back(false);
          m.goal = Cell{r, c};
          break;
        default: throw ConfigError(std::string("unknown grid map character '") + ch + "'");
      }
    }
  }
  if (m.free_cells().empty()) throw ConfigError("grid map has no free cell");
  return m;
}

inline GridMap load_grid_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read map file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid_map(ss.str());
}

/// Built-in layouts used by the experiment profiles.
namespace layouts {

/// Open room of the given interior size surrounded by walls, start in the top-left corner.
inline std::string open_room(int interior) {
  std::string s;
  const int w = interior + 2;
  for (int r = 0; r < w; ++r) {
    for (int c = 0; c < w; ++c) {
      const bool border = r == 0 || c == 0 || r == w - 1 || c == w - 1;
      s += border ? '#' : ((r == 1 && c == 1) ? 'S' : '.');
    }
    s += '\n';
  }
  return s;
}

/// Four rooms of `room` x `room` cells joined by one-cell doors; start in the top-left room's corner.
inline std::string four_rooms(int room) {
  const int w = 2 * room + 3;
  const int mid = room + 1;
  const int door = room / 2 + 1;
  std::vector<std::string> g(static_cast<std::size_t>(w), std::string(static_cast<std::size_t>(w), '.'));
  for (int i = 0; i < w; ++i) {
    g[0][static_cast<std::size_t>(i)] = g[static_cast<std::size_t>(w - 1)][static_cast<std::size_t>(i)] = '#';
    g[static_cast<std::size_t>(i)][0] = g[static_cast<std::size_t>(i)][static_cast<std::size_t>(w - 1)] = '#';
    g[static_cast<std::size_t>(mid)][static_cast<std::size_t>(i)] = '#';
    g[static_cast<std::size_t>(i)][static_cast<std::size_t>(mid)] = '#';
  }
  g[static_cast<std::size_t>(mid)][static_cast<std::size_t>(door)] = '.';
  g[static_cast<std::size_t>(mid)][static_cast<std::size_t>(mid + door)] = '.';
  g[static_cast<std::size_t>(door)][static_cast<std::size_t>(mid)] = '.';
  g[static_cast<std::size_t>(mid + door)][static_cast<std::size_t>(mid)] = '.';
  g[1][1] = 'S';
  std::string s;
  for (const auto& row : g) s += row + "\n";
  return s;
}

/// 30 x 30 grid (900 one-hot inputs) with interior walls forming a winding maze.
inline std::string representation_maze() {
  std::vector<std::string> g(30, std::string(30, '.'));
  for (int i = 0; i < 30; ++i) {
    g[0][static_cast<std::size_t>(i)] = g[29][static_cast<std::size_t>(i)] = '#';
    g[static_cast<std::size_t>(i)][0] = g[static_cast<std::size_t>(i)][29] = '#';
  }
  // Two horizontal walls with openings on alternating sides, and a vertical spur.
  for (int c = 1; c < 22; ++c) g[10][static_cast<std::size_t>(c)] = '#';
  for (int c = 8; c < 29; ++c) g[19][static_cast<std::size_t>(c)] = '#';
  for (int r = 20; r < 29; ++r) g[static_cast<std::size_t>(r)][15] = r < 26 ? '#' : '.';
  g[1][1] = 'S';
  std::string s;
  for (const auto& row : g) s += row + "\n";
  return s;
}

/// 8 x 8 U-shaped corridor: start in the top arm, goal at the end of the bottom arm.
inline std::string u_maze() {
  return "########\n"
         "#S.....#\n"
         "#......#\n"
         "#####..#\n"
         "#####..#\n"
         "#G.....#\n"
         "#......#\n"
         "########\n";
}

}  // namespace layouts

}  // namespace distop::envs
