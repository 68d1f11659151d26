#include "cotnav/grid.hpp"

#include <cstdlib>

namespace cotnav {

std::vector<Cell> bresenham_line(Cell from, Cell to) {
  std::vector<Cell> out;
  const int dx = std::abs(to.x - from.x);
  const int dy = -std::abs(to.y - from.y);
  const int sx = from.x < to.x ? 1 : -1;
  const int sy = from.y < to.y ? 1 : -1;
  int err = dx + dy;
  Cell c = from;
  while (true) {
    out.push_back(c);
    if (c == to) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      c.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      c.y += sy;
    }
  }
  return out;
}

}  // namespace cotnav
