#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

namespace cotnav {

struct Cell {
  int x = 0;
  int y = 0;

  auto operator<=>(const Cell&) const = default;
};

/// Cardinal lattice directions in clockwise order starting at north (-y).
enum class Direction : std::uint8_t { north = 0, east, south, west };

inline constexpr std::array<Direction, 4> kDirections = {Direction::north, Direction::east,
                                                         Direction::south, Direction::west};

inline Cell neighbor(Cell c, Direction d) {
  switch (d) {
    case Direction::north: return {c.x, c.y - 1};
    case Direction::east: return {c.x + 1, c.y};
    case Direction::south: return {c.x, c.y + 1};
    case Direction::west: return {c.x - 1, c.y};
  }
  return c;
}

struct GridSize {
  int width = 0;
  int height = 0;

  bool contains(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c.x);
  }
  Cell cell(std::size_t index) const {
    return {static_cast<int>(index % static_cast<std::size_t>(width)),
            static_cast<int>(index / static_cast<std::size_t>(width))};
  }
  std::size_t area() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
};

inline constexpr int kUnreached = -1;

/// Multi-source 4-connected BFS hop counts. Cells that are not passable (or
/// unreachable) get kUnreached. Sources that are not passable are skipped.
template <typename Passable>
std::vector<int> bfs_distances(GridSize size, std::span<const Cell> sources, Passable&& passable) {
  std::vector<int> dist(size.area(), kUnreached);
  std::deque<Cell> queue;
  for (Cell s : sources) {
    if (!size.contains(s) || !passable(s)) continue;
    auto& d = dist[size.index(s)];
    if (d == 0) continue;
    d = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    Cell c = queue.front();
    queue.pop_front();
    const int next = dist[size.index(c)] + 1;
    for (Direction dir : kDirections) {
      Cell n = neighbor(c, dir);
      if (!size.contains(n) || !passable(n)) continue;
      auto& d = dist[size.index(n)];
      if (d != kUnreached) continue;
      d = next;
      queue.push_back(n);
    }
  }
  return dist;
}

/// Bresenham rasterization from `from` to `to`, both endpoints included.
std::vector<Cell> bresenham_line(Cell from, Cell to);

}  // namespace cotnav
