#include "cotnav/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cotnav/errors.hpp"

namespace cotnav {
namespace {

constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "move_forward", "turn_left", "turn_right", "look_up", "look_down", "stop"};

constexpr std::array<std::string_view, 4> kStatusNames = {"running", "success", "failure_stop",
                                                          "failure_timeout"};

}  // namespace

std::string_view to_string(Action action) { return kActionNames.at(ordinal(action)); }

std::optional<Action> parse_action(std::string_view name) {
  for (std::size_t i = 0; i < kActionNames.size(); ++i) {
    if (kActionNames[i] == name) return static_cast<Action>(i);
  }
  return std::nullopt;
}

Action action_at(std::size_t i) {
  if (i >= kNumActions) throw ValidationError("action ordinal out of range: " + std::to_string(i));
  return static_cast<Action>(i);
}

std::string_view to_string(EpisodeStatus status) { return kStatusNames.at(static_cast<std::size_t>(status)); }

std::optional<EpisodeStatus> parse_status(std::string_view name) {
  for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
    if (kStatusNames[i] == name) return static_cast<EpisodeStatus>(i);
  }
  return std::nullopt;
}

Direction forward_direction(int heading) {
  return static_cast<Direction>(((heading + 1) % kNumHeadings) / 3);
}

RangeBand range_band(int pitch) {
  if (pitch < 0) return {0.0, 4.0};
  if (pitch > 0) return {5.0, 10.0};
  return {1.0, 8.0};
}

bool Observation::sees(std::string_view category) const {
  return std::any_of(visible_objects.begin(), visible_objects.end(),
                     [&](const auto& o) { return o.category == category; });
}

double euclidean_cells(Cell a, Cell b) {
  return std::hypot(static_cast<double>(b.x - a.x), static_cast<double>(b.y - a.y));
}

double relative_bearing_deg(const AgentPose& pose, Cell target) {
  const double dx = target.x - pose.position.x;
  const double dy = target.y - pose.position.y;
  if (dx == 0.0 && dy == 0.0) return 0.0;
  // Compass angle: 0 at north (-y), clockwise positive.
  const double compass = std::atan2(dx, -dy) * 180.0 / std::numbers::pi;
  double rel = compass - pose.heading_deg();
  while (rel > 180.0) rel -= 360.0;
  while (rel <= -180.0) rel += 360.0;
  return rel;
}

bool visible(const Scene& scene, const AgentPose& pose, Cell position) {
  if (!scene.in_bounds(position) || !scene.in_bounds(pose.position)) return false;
  const double dist = euclidean_cells(pose.position, position);
  const auto band = range_band(pose.pitch);
  if (dist < band.min_cells || dist > band.max_cells) return false;
  if (dist > 0.0 && std::abs(relative_bearing_deg(pose, position)) > kHalfFovDeg) return false;
  const auto line = bresenham_line(pose.position, position);
  for (std::size_t i = 1; i + 1 < line.size(); ++i) {
    if (scene.is_wall(line[i])) return false;
  }
  return true;
}

Observation observe(const Scene& scene, const EpisodeState& state) {
  Observation obs;
  obs.pose = state.pose;
  obs.target_category = state.target_category;
  obs.step_index = state.steps_taken;
  if (auto room = scene.room_of(state.pose.position)) obs.hidden_room = scene.rooms[*room].type;

  const auto band = range_band(state.pose.pitch);
  const int reach = static_cast<int>(std::ceil(band.max_cells));
  const Cell p = state.pose.position;
  for (int y = p.y - reach; y <= p.y + reach; ++y) {
    for (int x = p.x - reach; x <= p.x + reach; ++x) {
      const Cell c{x, y};
      if (!scene.in_bounds(c)) continue;
      if (visible(scene, state.pose, c)) obs.visible_cells.push_back({c, scene.is_wall(c)});
    }
  }
  for (const auto& o : scene.objects) {
    if (!visible(scene, state.pose, o.position)) continue;
    obs.visible_objects.push_back({o.instance_id, o.category, relative_bearing_deg(state.pose, o.position),
                                   euclidean_cells(p, o.position), o.position});
  }
  return obs;
}

std::optional<int> hops_to_nearest(const Scene& scene, Cell from, std::string_view category) {
  const auto targets = scene.instances_of(category);
  if (targets.empty()) return std::nullopt;
  const auto dist = bfs_distances(scene.size(), targets, [&](Cell c) { return scene.is_floor(c); });
  if (!scene.is_floor(from)) return std::nullopt;
  const int d = dist[scene.size().index(from)];
  if (d == kUnreached) return std::nullopt;
  return d;
}

EpisodeState reset(const Scene& scene, const Episode& episode, const SimConfig&) {
  if (!episode.scene_id.empty() && episode.scene_id != scene.id) {
    throw InvalidEpisodeError("episode " + episode.episode_id + " references scene " + episode.scene_id +
                              ", not " + scene.id);
  }
  const auto& pose = episode.start_pose;
  if (!scene.is_floor(pose.position)) {
    throw InvalidEpisodeError("episode " + episode.episode_id + " starts on a wall or outside the grid");
  }
  if (pose.heading < 0 || pose.heading >= kNumHeadings || pose.pitch < -1 || pose.pitch > 1) {
    throw InvalidEpisodeError("episode " + episode.episode_id + " has an invalid start orientation");
  }
  EpisodeState state;
  state.scene_id = scene.id;
  state.episode_id = episode.episode_id;
  state.target_category = episode.target_category;
  state.pose = pose;
  return state;
}

StepResult step(const Scene& scene, const EpisodeState& state, Action action, const SimConfig& config) {
  if (state.terminal()) {
    throw IllegalTransitionError("episode " + state.episode_id + " already ended with status " +
                                 std::string(to_string(state.status)));
  }
  EpisodeState next = state;
  switch (action) {
    case Action::move_forward: {
      const Cell dest = neighbor(state.pose.position, forward_direction(state.pose.heading));
      if (scene.is_floor(dest)) {
        next.pose.position = dest;
        next.path_length_m += scene.cell_size_m;
      }
      break;
    }
    case Action::turn_left: next.pose.heading = (state.pose.heading + kNumHeadings - 1) % kNumHeadings; break;
    case Action::turn_right: next.pose.heading = (state.pose.heading + 1) % kNumHeadings; break;
    case Action::look_up: next.pose.pitch = std::min(1, state.pose.pitch + 1); break;
    case Action::look_down: next.pose.pitch = std::max(-1, state.pose.pitch - 1); break;
    case Action::stop: break;
  }
  next.steps_taken += 1;
  Observation obs = observe(scene, next);

  if (action == Action::stop) {
    const auto hops = hops_to_nearest(scene, next.pose.position, next.target_category);
    const bool close = hops && *hops <= config.success_radius_cells;
    next.status = (close && obs.sees(next.target_category)) ? EpisodeStatus::success : EpisodeStatus::failure_stop;
  } else if (next.steps_taken >= config.max_steps) {
    next.status = EpisodeStatus::failure_timeout;
  }
  return {std::move(next), std::move(obs)};
}

}  // namespace cotnav
