#include "cotnav/map_memory.hpp"

#include <algorithm>
#include <cmath>

namespace cotnav {

MapMemory::MapMemory(GridSize size)
    : size_(size), known_(size.area(), KnownCell::unknown), explored_(size.area(), false) {}

void MapMemory::integrate_cells(const Observation& obs) {
  if (size_.contains(obs.pose.position)) {
    const auto i = size_.index(obs.pose.position);
    known_[i] = KnownCell::floor;
    explored_[i] = true;
  }
  for (const auto& vc : obs.visible_cells) {
    if (!size_.contains(vc.cell)) continue;
    const auto i = size_.index(vc.cell);
    known_[i] = vc.wall ? KnownCell::wall : KnownCell::floor;
    explored_[i] = true;
  }
}

void MapMemory::integrate(const Observation& obs) {
  integrate_cells(obs);
  for (const auto& o : obs.visible_objects) add_sighting({o.category, o.cell});
}

void MapMemory::add_sighting(Sighting sighting) {
  if (std::find(sightings_.begin(), sightings_.end(), sighting) == sightings_.end()) {
    sightings_.push_back(std::move(sighting));
  }
}

KnownCell MapMemory::known(Cell c) const {
  if (!size_.contains(c)) return KnownCell::wall;
  return known_[size_.index(c)];
}

bool MapMemory::explored(Cell c) const { return size_.contains(c) && explored_[size_.index(c)]; }

std::size_t MapMemory::explored_count() const {
  return static_cast<std::size_t>(std::count(explored_.begin(), explored_.end(), true));
}

std::vector<Cell> MapMemory::sightings_of(std::string_view category) const {
  std::vector<Cell> out;
  for (const auto& s : sightings_) {
    if (s.category == category && std::find(out.begin(), out.end(), s.cell) == out.end()) out.push_back(s.cell);
  }
  return out;
}

bool MapMemory::is_frontier(Cell c) const {
  if (known(c) != KnownCell::floor) return false;
  for (Direction d : kDirections) {
    const Cell n = neighbor(c, d);
    if (size_.contains(n) && known(n) == KnownCell::unknown) return true;
  }
  return false;
}

std::vector<Cell> MapMemory::frontiers() const {
  std::vector<Cell> out;
  for (std::size_t i = 0; i < known_.size(); ++i) {
    const Cell c = size_.cell(i);
    if (is_frontier(c)) out.push_back(c);
  }
  return out;
}

int turns_to_direction(int heading, Direction dir) {
  int best = kNumHeadings;
  for (int t = 0; t < kNumHeadings; ++t) {
    if (forward_direction(t) != dir) continue;
    const int right = (t - heading + kNumHeadings) % kNumHeadings;
    const int left = (heading - t + kNumHeadings) % kNumHeadings;
    best = std::min({best, right, left});
  }
  return best;
}

std::optional<Action> turn_toward_direction(int heading, Direction dir, TurnBias bias) {
  if (forward_direction(heading) == dir) return std::nullopt;
  int right = kNumHeadings;
  int left = kNumHeadings;
  for (int t = 0; t < kNumHeadings; ++t) {
    if (forward_direction(t) != dir) continue;
    right = std::min(right, (t - heading + kNumHeadings) % kNumHeadings);
    left = std::min(left, (heading - t + kNumHeadings) % kNumHeadings);
  }
  if (right < left) return Action::turn_right;
  if (left < right) return Action::turn_left;
  return bias == TurnBias::left ? Action::turn_left : Action::turn_right;
}

std::optional<Action> face_cell(const AgentPose& pose, Cell target, TurnBias bias) {
  if (target == pose.position) return std::nullopt;
  const double b = relative_bearing_deg(pose, target);
  if (std::abs(b) <= kHalfFovDeg) return std::nullopt;
  if (b == 180.0) return bias == TurnBias::left ? Action::turn_left : Action::turn_right;
  return b > 0.0 ? Action::turn_right : Action::turn_left;
}

NavStep step_toward(const MapMemory& memory, const AgentPose& pose, std::span<const Cell> goals, TurnBias bias) {
  auto passable = [&](Cell c) { return memory.known_floor(c); };
  const auto dist = bfs_distances(memory.size(), goals, passable);
  const auto size = memory.size();
  if (!size.contains(pose.position)) return {};
  const int here = dist[size.index(pose.position)];
  if (here == kUnreached) return {NavStep::Kind::unreachable, Action::stop};
  if (here == 0) return {NavStep::Kind::arrived, Action::stop};

  // Among neighbours one hop closer, prefer the fewest turns, then N/E/S/W order.
  std::optional<Direction> best;
  int best_turns = kNumHeadings;
  for (Direction d : kDirections) {
    const Cell n = neighbor(pose.position, d);
    if (!size.contains(n) || dist[size.index(n)] != here - 1) continue;
    const int turns = turns_to_direction(pose.heading, d);
    if (turns < best_turns) {
      best = d;
      best_turns = turns;
    }
  }
  if (!best) return {NavStep::Kind::unreachable, Action::stop};
  if (auto turn = turn_toward_direction(pose.heading, *best, bias)) return {NavStep::Kind::act, *turn};
  return {NavStep::Kind::act, Action::move_forward};
}

std::optional<Cell> nearest_frontier(const MapMemory& memory, Cell from) {
  auto passable = [&](Cell c) { return memory.known_floor(c); };
  const auto dist = bfs_distances(memory.size(), std::span(&from, 1), passable);
  std::optional<Cell> best;
  int best_d = 0;
  const auto size = memory.size();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] == kUnreached) continue;
    const Cell c = size.cell(i);
    if (!memory.is_frontier(c)) continue;
    if (!best || dist[i] < best_d) {
      best = c;
      best_d = dist[i];
    }
  }
  return best;
}

std::optional<Action> explore_action(const MapMemory& memory, const AgentPose& pose, TurnBias bias) {
  if (memory.is_frontier(pose.position)) {
    // Adjacent cells fall outside the look-up band.
    if (pose.pitch > 0) return Action::look_down;
    std::optional<Direction> best;
    int best_turns = kNumHeadings;
    for (Direction d : kDirections) {
      const Cell n = neighbor(pose.position, d);
      if (!memory.size().contains(n) || memory.known(n) != KnownCell::unknown) continue;
      const int turns = turns_to_direction(pose.heading, d);
      if (turns < best_turns) {
        best = d;
        best_turns = turns;
      }
    }
    if (best) {
      if (auto turn = turn_toward_direction(pose.heading, *best, bias)) return *turn;
      return Action::move_forward;
    }
  }
  const auto frontier = nearest_frontier(memory, pose.position);
  if (!frontier) return std::nullopt;
  const Cell goal = *frontier;
  const auto nav = step_toward(memory, pose, std::span(&goal, 1), bias);
  if (nav.kind != NavStep::Kind::act) return std::nullopt;
  return nav.action;
}

std::optional<int> known_hops(const MapMemory& memory, Cell from, std::span<const Cell> targets) {
  auto passable = [&](Cell c) { return memory.known_floor(c); };
  const auto dist = bfs_distances(memory.size(), targets, passable);
  if (!memory.size().contains(from)) return std::nullopt;
  const int d = dist[memory.size().index(from)];
  if (d == kUnreached) return std::nullopt;
  return d;
}

std::optional<Action> approach_action(const MapMemory& memory, const AgentPose& pose, std::span<const Cell> targets,
                                      int radius, bool target_visible, TurnBias bias) {
  if (targets.empty()) return std::nullopt;
  auto passable = [&](Cell c) { return memory.known_floor(c); };
  const auto size = memory.size();
  const auto from_targets = bfs_distances(size, targets, passable);
  const int here = size.contains(pose.position) ? from_targets[size.index(pose.position)] : kUnreached;

  if (here != kUnreached && here <= radius) {
    if (target_visible) return Action::stop;
    // Nearest target by straight-line distance, ties to the earliest listed.
    Cell t = targets.front();
    for (Cell c : targets) {
      if (euclidean_cells(pose.position, c) < euclidean_cells(pose.position, t)) t = c;
    }
    const double e = euclidean_cells(pose.position, t);
    const auto band = range_band(pose.pitch);
    if (e < band.min_cells) return Action::look_down;
    if (e > band.max_cells) return Action::look_up;
    if (auto turn = face_cell(pose, t, bias)) return *turn;
    const auto nav = step_toward(memory, pose, std::span(&t, 1), bias);
    if (nav.kind == NavStep::Kind::act) return nav.action;
    return std::nullopt;
  }

  std::vector<Cell> eligible;
  for (std::size_t i = 0; i < from_targets.size(); ++i) {
    if (from_targets[i] != kUnreached && from_targets[i] <= radius) eligible.push_back(size.cell(i));
  }
  const auto nav = step_toward(memory, pose, eligible, bias);
  if (nav.kind != NavStep::Kind::act) return std::nullopt;
  return nav.action;
}

}  // namespace cotnav
