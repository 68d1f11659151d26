#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cotnav/grid.hpp"
#include "cotnav/scene.hpp"

namespace cotnav {

inline constexpr std::size_t kNumActions = 6;
inline constexpr int kNumHeadings = 12;
inline constexpr double kHeadingStepDeg = 30.0;
inline constexpr double kHalfFovDeg = 39.5;  // 79 degree horizontal field of view
inline constexpr int kMaxEpisodeSteps = 500;

enum class Action : std::uint8_t {
  move_forward = 0,
  turn_left = 1,
  turn_right = 2,
  look_up = 3,
  look_down = 4,
  stop = 5,
};

std::string_view to_string(Action action);
std::optional<Action> parse_action(std::string_view name);
Action action_at(std::size_t ordinal);
inline std::size_t ordinal(Action a) { return static_cast<std::size_t>(a); }

/// Heading is a compass index: 0 = north (-y), increasing clockwise in 30
/// degree steps. Pitch is -1 (down), 0 (level) or +1 (up), in 30 degree units.
struct AgentPose {
  Cell position;
  int heading = 0;
  int pitch = 0;

  double heading_deg() const { return heading * kHeadingStepDeg; }
  bool operator==(const AgentPose&) const = default;
};

/// Lattice direction a forward step takes: headings within 45 degrees of a
/// cardinal axis move along that axis.
Direction forward_direction(int heading);

/// Distance band (in cells, inclusive) visible at a given pitch.
struct RangeBand {
  double min_cells;
  double max_cells;
};
RangeBand range_band(int pitch);

struct Episode {
  std::string episode_id;
  std::string scene_id;
  AgentPose start_pose;
  std::string target_category;
  double geodesic_l_m = 0.0;

  bool operator==(const Episode&) const = default;
};

struct VisibleObject {
  int instance_id = 0;
  std::string category;
  double bearing_deg = 0.0;  // signed, positive to the right of the heading
  double distance_cells = 0.0;
  Cell cell;

  bool operator==(const VisibleObject&) const = default;
};

struct VisibleCell {
  Cell cell;
  bool wall = false;

  bool operator==(const VisibleCell&) const = default;
};

/// What the agent perceives from one pose. `hidden_room` is ground truth kept
/// for analysis; policies and the teleop payload never read it.
struct Observation {
  std::vector<VisibleObject> visible_objects;
  std::vector<VisibleCell> visible_cells;
  AgentPose pose;
  std::string target_category;
  int step_index = 0;
  std::optional<RoomType> hidden_room;

  bool sees(std::string_view category) const;
  bool operator==(const Observation&) const = default;
};

enum class EpisodeStatus : std::uint8_t { running, success, failure_stop, failure_timeout };

std::string_view to_string(EpisodeStatus status);
std::optional<EpisodeStatus> parse_status(std::string_view name);

struct SimConfig {
  int success_radius_cells = 1;
  int max_steps = kMaxEpisodeSteps;
};

struct EpisodeState {
  std::string scene_id;
  std::string episode_id;
  std::string target_category;
  AgentPose pose;
  int steps_taken = 0;
  EpisodeStatus status = EpisodeStatus::running;
  double path_length_m = 0.0;

  bool terminal() const { return status != EpisodeStatus::running; }
  bool operator==(const EpisodeState&) const = default;
};

struct StepResult {
  EpisodeState state;
  Observation observation;
};

/// Signed angle from the agent heading to `target`, in (-180, 180].
double relative_bearing_deg(const AgentPose& pose, Cell target);
double euclidean_cells(Cell a, Cell b);

/// Inside the field of view and the pitch range band, with a wall-free Bresenham line. The target
/// cell itself may be a wall (so walls can be seen); intermediate cells may not.
bool visible(const Scene& scene, const AgentPose& pose, Cell position);

Observation observe(const Scene& scene, const EpisodeState& state);

/// Hop distance from `from` to the nearest instance of `category` over floor
/// cells, or nullopt when none is reachable.
std::optional<int> hops_to_nearest(const Scene& scene, Cell from, std::string_view category);

/// Throws InvalidEpisodeError when the episode does not fit the scene.
EpisodeState reset(const Scene& scene, const Episode& episode, const SimConfig& config = {});

/// Pure transition. Throws IllegalTransitionError on terminal states.
StepResult step(const Scene& scene, const EpisodeState& state, Action action, const SimConfig& config = {});

}  // namespace cotnav
