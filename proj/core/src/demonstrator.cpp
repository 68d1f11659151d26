#include "cotnav/demonstrator.hpp"

#include "cotnav/episodes.hpp"
#include "cotnav/errors.hpp"
#include "cotnav/random.hpp"

namespace cotnav {

std::string_view to_string(DemoSource source) { return source == DemoSource::scripted ? "scripted" : "human"; }

std::vector<Action> Trajectory::actions() const {
  std::vector<Action> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.action);
  return out;
}

void Trajectory::validate() const {
  const bool ends_with_stop = !steps.empty() && steps.back().action == Action::stop;
  const bool stop_outcome = outcome == EpisodeStatus::success || outcome == EpisodeStatus::failure_stop;
  if (ends_with_stop != stop_outcome) {
    throw ValidationError("trajectory " + episode.episode_id + ": last action is stop iff the outcome is a stop outcome");
  }
  if (outcome == EpisodeStatus::running) throw ValidationError("trajectory " + episode.episode_id + " never terminated");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].observation.step_index != static_cast<int>(i)) {
      throw ValidationError("trajectory " + episode.episode_id + ": step indices out of order");
    }
  }
}

Action searcher_action(const MapMemory& memory, const Observation& obs, int success_radius_cells, TurnBias bias) {
  const auto targets = memory.sightings_of(obs.target_category);
  if (!targets.empty()) {
    if (auto a = approach_action(memory, obs.pose, targets, success_radius_cells, obs.sees(obs.target_category), bias)) {
      return *a;
    }
  }
  if (auto a = explore_action(memory, obs.pose, bias)) return *a;
  // Nothing reachable is left to explore: keep sweeping in place.
  return Action::turn_left;
}

Trajectory scripted_demo(const Scene& scene, const Episode& episode, std::uint64_t seed, const SimConfig& config) {
  Rng rng(seed);
  const TurnBias bias = rng.bernoulli(0.5) ? TurnBias::left : TurnBias::right;

  Trajectory traj;
  traj.episode = episode;
  traj.demo_source = DemoSource::scripted;

  EpisodeState state = reset(scene, episode, config);
  Observation obs = observe(scene, state);
  MapMemory memory(scene.size());
  while (!state.terminal()) {
    memory.integrate(obs);
    const Action action = searcher_action(memory, obs, config.success_radius_cells, bias);
    auto result = step(scene, state, action, config);
    traj.steps.push_back({std::move(obs), action});
    state = std::move(result.state);
    obs = std::move(result.observation);
  }
  traj.final_observation = std::move(obs);
  traj.outcome = state.status;
  traj.path_length_m = state.path_length_m;
  return traj;
}

std::vector<Trajectory> filter_demos(const std::vector<Trajectory>& trajectories, FilterReport* report, int max_steps) {
  FilterReport local;
  std::vector<Trajectory> out;
  for (const auto& t : trajectories) {
    if (t.outcome == EpisodeStatus::success && static_cast<int>(t.steps.size()) <= max_steps) {
      out.push_back(t);
      ++local.kept;
    } else if (t.outcome == EpisodeStatus::failure_stop) {
      ++local.removed_failure_stop;
    } else if (t.outcome == EpisodeStatus::failure_timeout) {
      ++local.removed_timeout;
    } else if (static_cast<int>(t.steps.size()) > max_steps) {
      ++local.removed_too_long;
    } else {
      ++local.removed_other;
    }
  }
  if (report) *report = local;
  return out;
}

Trajectory replay(const Scene& scene, const Episode& episode, const std::vector<Action>& actions, DemoSource source,
                  const SimConfig& config) {
  if (actions.empty()) throw ValidationError("replay: action list is empty");
  Trajectory traj;
  traj.episode = episode;
  traj.demo_source = source;
  EpisodeState state = reset(scene, episode, config);
  Observation obs = observe(scene, state);
  for (Action a : actions) {
    auto result = step(scene, state, a, config);
    traj.steps.push_back({std::move(obs), a});
    state = std::move(result.state);
    obs = std::move(result.observation);
  }
  traj.final_observation = std::move(obs);
  traj.outcome = state.status;
  traj.path_length_m = state.path_length_m;
  return traj;
}

bool replay_matches(const Scene& scene, const Trajectory& trajectory, const SimConfig& config) {
  try {
    return replay(scene, trajectory.episode, trajectory.actions(), trajectory.demo_source, config) == trajectory;
  } catch (const Error&) {
    return false;
  }
}

OrderedJson observation_to_json(const Observation& obs) {
  OrderedJson j;
  j["step_index"] = obs.step_index;
  j["pose"] = pose_to_json(obs.pose);
  j["target_category"] = obs.target_category;
  auto& objects = j["visible_objects"] = OrderedJson::array();
  for (const auto& o : obs.visible_objects) {
    objects.push_back({{"id", o.instance_id},
                       {"category", o.category},
                       {"bearing_deg", o.bearing_deg},
                       {"distance_cells", o.distance_cells},
                       {"cell", {o.cell.x, o.cell.y}}});
  }
  auto& cells = j["visible_cells"] = OrderedJson::array();
  for (const auto& c : obs.visible_cells) cells.push_back({c.cell.x, c.cell.y, c.wall ? 1 : 0});
  if (obs.hidden_room) j["hidden_room"] = to_string(*obs.hidden_room);
  return j;
}

Observation observation_from_json(const Json& j) {
  Observation obs;
  obs.step_index = j.at("step_index").get<int>();
  obs.pose = pose_from_json(j.at("pose"));
  obs.target_category = j.at("target_category").get<std::string>();
  for (const auto& o : j.at("visible_objects")) {
    const auto& c = o.at("cell");
    obs.visible_objects.push_back({o.at("id").get<int>(), o.at("category").get<std::string>(),
                                   o.at("bearing_deg").get<double>(), o.at("distance_cells").get<double>(),
                                   Cell{c.at(0).get<int>(), c.at(1).get<int>()}});
  }
  for (const auto& c : j.at("visible_cells")) {
    obs.visible_cells.push_back({Cell{c.at(0).get<int>(), c.at(1).get<int>()}, c.at(2).get<int>() != 0});
  }
  if (j.contains("hidden_room")) {
    auto room = parse_room_type(j["hidden_room"].get<std::string>());
    if (!room) throw ParseError("observation: unknown room type");
    obs.hidden_room = *room;
  }
  return obs;
}

std::string format_trajectories(const std::vector<Trajectory>& trajectories, std::string_view manifest_hash) {
  std::vector<OrderedJson> records;
  for (const auto& t : trajectories) {
    OrderedJson head;
    head["record"] = "trajectory";
    head["episode"] = episode_to_json(t.episode);
    head["outcome"] = to_string(t.outcome);
    head["path_length_m"] = t.path_length_m;
    head["demo_source"] = to_string(t.demo_source);
    head["step_count"] = t.steps.size();
    head["final_observation"] = observation_to_json(t.final_observation);
    records.push_back(std::move(head));
    for (const auto& s : t.steps) {
      OrderedJson r;
      r["record"] = "step";
      r["action"] = to_string(s.action);
      r["observation"] = observation_to_json(s.observation);
      records.push_back(std::move(r));
    }
  }
  return make_jsonl(jsonl_header("trajectories", kTrajectoryFormatVersion, manifest_hash), records);
}

std::vector<Trajectory> parse_trajectories(std::string_view text) {
  auto doc = parse_jsonl(text, "trajectories");
  std::vector<Trajectory> out;
  try {
    std::size_t i = 0;
    while (i < doc.records.size()) {
      const auto& head = doc.records[i++];
      if (head.at("record") != "trajectory") throw ParseError("trajectories: expected a trajectory record");
      Trajectory t;
      t.episode = episode_from_json(head.at("episode"));
      auto outcome = parse_status(head.at("outcome").get<std::string>());
      if (!outcome) throw ParseError("trajectories: unknown outcome");
      t.outcome = *outcome;
      t.path_length_m = head.at("path_length_m").get<double>();
      const auto source = head.at("demo_source").get<std::string>();
      if (source == "scripted") t.demo_source = DemoSource::scripted;
      else if (source == "human") t.demo_source = DemoSource::human;
      else throw ParseError("trajectories: unknown demo_source " + source);
      t.final_observation = observation_from_json(head.at("final_observation"));
      const auto count = head.at("step_count").get<std::size_t>();
      for (std::size_t k = 0; k < count; ++k) {
        if (i >= doc.records.size()) throw ParseError("trajectories: truncated step list for " + t.episode.episode_id);
        const auto& r = doc.records[i++];
        if (r.at("record") != "step") throw ParseError("trajectories: expected a step record");
        auto action = parse_action(r.at("action").get<std::string>());
        if (!action) throw ParseError("trajectories: unknown action " + r.at("action").get<std::string>());
        t.steps.push_back({observation_from_json(r.at("observation")), *action});
      }
      t.validate();
      out.push_back(std::move(t));
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("trajectories: ") + e.what());
  }
  return out;
}

void save_trajectories(const std::vector<Trajectory>& trajectories, const std::filesystem::path& path,
                       std::string_view manifest_hash) {
  write_file(path, format_trajectories(trajectories, manifest_hash));
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path) {
  return parse_trajectories(read_file(path));
}

}  // namespace cotnav
