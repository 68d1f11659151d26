#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cotnav/io.hpp"
#include "cotnav/map_memory.hpp"
#include "cotnav/simulator.hpp"

namespace cotnav {

inline constexpr int kTrajectoryFormatVersion = 1;

enum class DemoSource : std::uint8_t { scripted, human };
std::string_view to_string(DemoSource source);

struct TrajectoryStep {
  Observation observation;  // what the agent saw when choosing `action`
  Action action = Action::stop;

  bool operator==(const TrajectoryStep&) const = default;
};

struct Trajectory {
  Episode episode;
  std::vector<TrajectoryStep> steps;
  Observation final_observation;
  EpisodeStatus outcome = EpisodeStatus::running;
  double path_length_m = 0.0;
  DemoSource demo_source = DemoSource::scripted;

  std::vector<Action> actions() const;
  /// Throws ValidationError when the stop/outcome pairing is inconsistent.
  void validate() const;

  bool operator==(const Trajectory&) const = default;
};

/// Frontier-seeking searcher: explores until the target is sighted, then
/// walks a known-cell shortest path to it and stops once the success
/// predicate holds. Never consults ground-truth paths. The seed only breaks
/// exact 180-degree turn ties.
Trajectory scripted_demo(const Scene& scene, const Episode& episode, std::uint64_t seed, const SimConfig& config = {});

/// One decision of the searcher given its memory (already updated with `obs`).
Action searcher_action(const MapMemory& memory, const Observation& obs, int success_radius_cells, TurnBias bias);

struct FilterReport {
  std::size_t kept = 0;
  std::size_t removed_failure_stop = 0;
  std::size_t removed_timeout = 0;
  std::size_t removed_too_long = 0;
  std::size_t removed_other = 0;
};

std::vector<Trajectory> filter_demos(const std::vector<Trajectory>& trajectories, FilterReport* report = nullptr,
                                     int max_steps = kMaxEpisodeSteps);

/// Re-executes `actions` from the episode start. Throws ValidationError for
/// an empty list and IllegalTransitionError if actions continue past a
/// terminal state.
Trajectory replay(const Scene& scene, const Episode& episode, const std::vector<Action>& actions,
                  DemoSource source = DemoSource::scripted, const SimConfig& config = {});

/// True when replaying the stored actions reproduces the trajectory exactly.
bool replay_matches(const Scene& scene, const Trajectory& trajectory, const SimConfig& config = {});

OrderedJson observation_to_json(const Observation& obs);
Observation observation_from_json(const Json& j);

/// Header record, then per trajectory one `trajectory` record followed by one
/// `step` record per step. Scripted and human demos share this schema.
std::string format_trajectories(const std::vector<Trajectory>& trajectories, std::string_view manifest_hash = "");
std::vector<Trajectory> parse_trajectories(std::string_view text);
void save_trajectories(const std::vector<Trajectory>& trajectories, const std::filesystem::path& path,
                       std::string_view manifest_hash = "");
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path);

}  // namespace cotnav
