#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cotnav/grid.hpp"
#include "cotnav/simulator.hpp"

namespace cotnav {

enum class KnownCell : std::uint8_t { unknown, floor, wall };

struct Sighting {
  std::string category;
  Cell cell;

  bool operator==(const Sighting&) const = default;
};

/// Egocentric map built only from observations: which cells have been seen,
/// what they are, and where objects were spotted. Never reads the scene.
class MapMemory {
 public:
  explicit MapMemory(GridSize size);

  /// Marks the agent cell and every visible cell, and records the
  /// observation's objects as sightings.
  void integrate(const Observation& obs);
  void integrate_cells(const Observation& obs);
  void add_sighting(Sighting sighting);

  GridSize size() const { return size_; }
  KnownCell known(Cell c) const;
  bool explored(Cell c) const;
  bool known_floor(Cell c) const { return known(c) == KnownCell::floor; }
  std::size_t explored_count() const;

  const std::vector<Sighting>& sightings() const { return sightings_; }
  std::vector<Cell> sightings_of(std::string_view category) const;

  /// Known floor cell with at least one unknown 4-neighbour.
  bool is_frontier(Cell c) const;
  std::vector<Cell> frontiers() const;

  bool operator==(const MapMemory&) const = default;

 private:
  GridSize size_;
  std::vector<KnownCell> known_;
  std::vector<bool> explored_;
  std::vector<Sighting> sightings_;
};

/// Resolves exact 180-degree rotation ties.
enum class TurnBias : std::uint8_t { left, right };

/// Rotation that brings the forward direction onto `dir`, or nullopt if a
/// forward step already moves along `dir`.
std::optional<Action> turn_toward_direction(int heading, Direction dir, TurnBias bias);
int turns_to_direction(int heading, Direction dir);

/// Rotation that brings `target` inside the field of view, or nullopt.
std::optional<Action> face_cell(const AgentPose& pose, Cell target, TurnBias bias);

struct NavStep {
  enum class Kind : std::uint8_t { act, arrived, unreachable };
  Kind kind = Kind::unreachable;
  Action action = Action::stop;
};

/// First action along a shortest known-floor path to any goal: rotate to
/// face the next cell, then move forward.
NavStep step_toward(const MapMemory& memory, const AgentPose& pose, std::span<const Cell> goals, TurnBias bias);

/// Nearest frontier by known-floor BFS from `from`; ties go to the lowest cell index.
std::optional<Cell> nearest_frontier(const MapMemory& memory, Cell from);

/// Frontier-seeking exploration step, or nullopt when nothing reachable is left unexplored.
std::optional<Action> explore_action(const MapMemory& memory, const AgentPose& pose, TurnBias bias);

/// Step toward remembered target cells. Returns stop once the agent is within
/// `radius` hops and the target is visible; otherwise adjusts pitch, rotates
/// or moves to make the success predicate hold. nullopt if no known path exists.
std::optional<Action> approach_action(const MapMemory& memory, const AgentPose& pose, std::span<const Cell> targets,
                                      int radius, bool target_visible, TurnBias bias);

/// Known-floor hop distance from `from` to the nearest of `targets`.
std::optional<int> known_hops(const MapMemory& memory, Cell from, std::span<const Cell> targets);

}  // namespace cotnav
