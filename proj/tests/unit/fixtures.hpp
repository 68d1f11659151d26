#pragma once

#include <map>
#include <string>
#include <vector>

#include "cotnav/scene.hpp"
#include "cotnav/simulator.hpp"

namespace cotnav::testing {

// Builds a scene from rows of '#' (wall), '.' (floor) and letters standing for
// objects on floor cells. All floor is one living room.
inline Scene scene_from_ascii(const std::vector<std::string>& rows, const std::map<char, std::string>& legend,
                              std::string id = "fixture") {
  Scene s;
  s.id = std::move(id);
  s.height = static_cast<int>(rows.size());
  s.width = static_cast<int>(rows.front().size());
  s.cells.assign(static_cast<std::size_t>(s.width * s.height), CellKind::wall);
  Rect extent{s.width, s.height, -1, -1};
  int next_id = 0;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const char ch = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
      if (ch == '#') continue;
      s.cells[s.size().index({x, y})] = CellKind::floor;
      extent = {std::min(extent.x0, x), std::min(extent.y0, y), std::max(extent.x1, x), std::max(extent.y1, y)};
      if (ch != '.') s.objects.push_back({next_id++, legend.at(ch), {x, y}});
    }
  }
  s.rooms.push_back({RoomType::living_room, extent, {}});
  return s;
}

inline Episode episode_at(const Scene& scene, Cell start, int heading, std::string target, double l_m = 0.0) {
  return {scene.id + "/test", scene.id, {start, heading, 0}, std::move(target), l_m};
}

}  // namespace cotnav::testing
