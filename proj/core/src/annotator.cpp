#include "cotnav/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cotnav/errors.hpp"
#include "cotnav/hash.hpp"
#include "parallel.hpp"

namespace cotnav {
namespace {

constexpr std::array<std::string_view, 6> kRoundNames = {"subgoal_detection", "room_inference", "object_association",
                                                         "plausibility",      "suggestion",     "action"};

constexpr std::array<std::string_view, 6> kSuggestionNames = {"stop_here", "approach",      "search_near",
                                                              "explore",   "target_absent", "free_text"};

constexpr std::array<ActionPhrase, kNumActions> kPhraseTable = {{
    {"move forward", Action::move_forward},
    {"turn left", Action::turn_left},
    {"turn right", Action::turn_right},
    {"look up", Action::look_up},
    {"look down", Action::look_down},
    {"stop", Action::stop},
}};

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

std::string describe_objects(const std::vector<VisibleObject>& objects) {
  if (objects.empty()) return "No salient objects are visible.";
  std::string out = "I see ";
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    if (i > 0) out += i + 1 == objects.size() ? " and " : ", ";
    std::string where;
    if (std::abs(o.bearing_deg) <= 10.0) where = "straight ahead";
    else if (o.bearing_deg < 0.0) where = "ahead on the left";
    else where = "ahead on the right";
    out += "a " + o.category + " " + where + ", " + fixed2(o.distance_cells) + " cells away";
  }
  out += ".";
  return out;
}

std::vector<std::string> categories_of(const std::vector<VisibleObject>& objects) {
  std::vector<std::string> out;
  out.reserve(objects.size());
  for (const auto& o : objects) out.push_back(o.category);
  return out;
}

std::uint64_t stable_hash(std::string_view s) {
  const auto hex = sha256_hex(s);
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

SuggestionKind classify_suggestion(std::string_view text) {
  const std::string lowered = [&] {
    std::string s(trim(text));
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  }();
  auto starts = [&](std::string_view p) { return lowered.rfind(p, 0) == 0; };
  if (starts("stop here")) return SuggestionKind::stop_here;
  if (starts("approach the")) return SuggestionKind::approach;
  if (starts("search near the")) return SuggestionKind::search_near;
  if (starts("explore another room")) return SuggestionKind::explore;
  if (starts("target likely absent")) return SuggestionKind::target_absent;
  return SuggestionKind::free_text;
}

struct PlanningInputs {
  Observation perceived;
  RoomInference room;
  std::map<std::string, double> relevance;
  double room_prior = 0.0;
  bool plausible = false;
  std::size_t explored = 0;
  bool frontier_left = false;
  std::optional<int> target_hops;
};

PlanningInputs planning_inputs(const Observation& obs, const Detection& detection, const MapMemory& memory,
                               const CooccurrencePriors& priors, const AnnotatorConfig& config,
                               const CategoryVocab& vocab) {
  PlanningInputs in;
  in.perceived = obs;
  in.perceived.visible_objects = detection.objects;
  const auto cats = categories_of(detection.objects);
  in.room = infer_room(cats, priors, vocab);
  in.relevance = associate_objects(cats, obs.target_category, priors, vocab);
  in.room_prior = priors.room(vocab.index_of(obs.target_category), in.room.room);
  in.plausible = in.room_prior >= config.plausibility_threshold;
  in.explored = memory.explored_count();
  in.frontier_left = nearest_frontier(memory, obs.pose.position).has_value();
  const auto targets = memory.sightings_of(obs.target_category);
  if (!targets.empty()) in.target_hops = known_hops(memory, obs.pose.position, targets);
  return in;
}

std::vector<ChatMessage> planning_prompt(const PlanningInputs& in, const Detection& detection) {
  const auto& target = in.perceived.target_category;
  std::string ctx = "Target object: " + target + ".\n";
  ctx += "Perception: " + detection.text + "\n";
  ctx += "Room guess: " + std::string(to_string(in.room.room)) + " (confidence " + fixed2(in.room.confidence) + ").\n";
  ctx += "Relevance to the " + target + ":";
  if (in.relevance.empty()) ctx += " none";
  for (const auto& [name, score] : in.relevance) ctx += " " + name + "=" + fixed2(score);
  ctx += ".\n";
  ctx += "Prior that a " + target + " is in this room: " + fixed2(in.room_prior) + ".\n";
  ctx += "Explored cells: " + std::to_string(in.explored) + "; unexplored area reachable: " +
         (in.frontier_left ? "yes" : "no") + ".\n";
  if (in.target_hops) ctx += "The " + target + " was seen " + std::to_string(*in.target_hops) + " steps away.\n";
  ctx += "Suggest the next move. Reply with `SUGGESTION: <short advice>` and end with a final line "
         "`ACTION: <move_forward|turn_left|turn_right|look_up|look_down|stop>`.";
  return {{"system", "You are the planning module of an indoor robot searching for an object. Think about "
                     "whether the current room is plausible, then choose one executable action."},
          {"user", ctx}};
}

QARecord compose_record(const Observation& obs, std::optional<Action> previous, const Detection& detection,
                        const PlanningInputs& in, const Suggestion& suggestion, Action label,
                        const AnnotatorConfig& config) {
  QARecord r;
  r.step_index = obs.step_index;
  r.context.target_category = obs.target_category;
  r.context.visible_categories = categories_of(obs.visible_objects);
  r.context.pitch = obs.pose.pitch;
  r.context.step_index = obs.step_index;
  r.context.previous_action = previous;
  r.relevance_scores = in.relevance;
  r.inferred_room = in.room;
  r.suggestion = suggestion;
  r.label_action = label;
  r.detection_confidence = detection.detection_confidence;
  r.alignment_score = action_alignment(suggestion.action, label);
  r.confidence = score_confidence(suggestion.action, label, detection.detection_confidence, config.detection_weight,
                                  config.alignment_weight);

  const auto& target = obs.target_category;
  {
    Json objs = Json::array();
    for (const auto& o : detection.objects) {
      objs.push_back({{"category", o.category}, {"bearing_deg", o.bearing_deg}, {"distance_cells", o.distance_cells}});
    }
    r.rounds.push_back({RoundKind::subgoal_detection,
                        "You are searching for a " + target + ". Which objects are visible, and how are they arranged?",
                        detection.text,
                        {{"objects", objs}, {"detection_confidence", detection.detection_confidence}}});
  }
  {
    std::string answer;
    if (detection.objects.empty()) {
      answer = "There is not enough evidence to tell; the room type is unknown.";
    } else {
      std::string names;
      const auto cats = categories_of(detection.objects);
      for (std::size_t i = 0; i < cats.size(); ++i) {
        if (i > 0) names += i + 1 == cats.size() ? " and " : ", ";
        names += cats[i];
      }
      answer = "The " + names + " suggest a " + std::string(to_string(in.room.room)) + " (confidence " +
               fixed2(in.room.confidence) + ").";
    }
    r.rounds.push_back({RoundKind::room_inference, "Based on these objects, what type of room is the agent in?", answer,
                        {{"room", to_string(in.room.room)}, {"confidence", in.room.confidence}}});
  }
  {
    std::string answer;
    Json scores = Json::object();
    for (const auto& [name, score] : in.relevance) {
      if (!answer.empty()) answer += "; ";
      answer += name + ": " + fixed2(score);
      scores[name] = score;
    }
    if (answer.empty()) answer = "No visible objects to relate to the " + target + ".";
    r.rounds.push_back({RoundKind::object_association,
                        "How relevant is each visible object to finding the " + target + "?", answer,
                        {{"relevance", scores}}});
  }
  {
    const std::string room(to_string(in.room.room));
    std::string answer = (in.plausible ? "Yes: a " : "No: a ") + target + (in.plausible ? " is likely" : " is unlikely") +
                         " in a " + room + " (prior " + fixed2(in.room_prior) + ").";
    r.rounds.push_back({RoundKind::plausibility, "Is this room a plausible place to find the " + target + "?", answer,
                        {{"prior", in.room_prior},
                         {"threshold", config.plausibility_threshold},
                         {"plausible", in.plausible}}});
  }
  r.rounds.push_back({RoundKind::suggestion, "What should the agent do next?", suggestion.text,
                      {{"kind", to_string(suggestion.kind)}}});
  r.rounds.push_back({RoundKind::action, "Which executable action carries out this suggestion?",
                      std::string(action_phrase(suggestion.action)),
                      {{"action", to_string(suggestion.action)}}});
  return r;
}

Suggestion chat_suggestion(const ChatBackend& chat, const std::vector<ChatMessage>& prompt) {
  const std::string reply = chat.client->complete({prompt, "", chat.temperature});
  Suggestion s;
  s.action = parse_action_reply(reply);
  for (auto line : lines_of(reply)) {
    line = trim(line);
    if (line.rfind("SUGGESTION:", 0) == 0) {
      s.text = std::string(trim(line.substr(11)));
      break;
    }
  }
  if (s.text.empty()) s.text = std::string(action_phrase(s.action));
  s.kind = classify_suggestion(s.text);
  return s;
}

std::vector<ChatMessage> detection_prompt(const Observation& obs, const std::vector<VisibleObject>& reported,
                                          const CategoryVocab& vocab) {
  std::string names;
  for (const auto& c : vocab.categories()) names += (names.empty() ? "" : ", ") + c;
  return {{"system", "You are the perception module of an indoor robot. Report only objects that are in view."},
          {"user", "Target: " + obs.target_category + ". Camera view: " + describe_objects(reported) +
                       "\nList the objects you can see on one line as `OBJECTS: name, name` using these category "
                       "names: " + names + ". Write `OBJECTS: none` if nothing is visible."}};
}

}  // namespace

std::string_view to_string(RoundKind kind) { return kRoundNames.at(static_cast<std::size_t>(kind)); }

std::optional<RoundKind> parse_round_kind(std::string_view name) {
  for (std::size_t i = 0; i < kRoundNames.size(); ++i) {
    if (kRoundNames[i] == name) return static_cast<RoundKind>(i);
  }
  return std::nullopt;
}

std::string_view to_string(SuggestionKind kind) { return kSuggestionNames.at(static_cast<std::size_t>(kind)); }

std::optional<SuggestionKind> parse_suggestion_kind(std::string_view name) {
  for (std::size_t i = 0; i < kSuggestionNames.size(); ++i) {
    if (kSuggestionNames[i] == name) return static_cast<SuggestionKind>(i);
  }
  return std::nullopt;
}

const std::array<ActionPhrase, kNumActions>& action_phrase_table() { return kPhraseTable; }

std::string_view action_phrase(Action action) {
  for (const auto& e : kPhraseTable) {
    if (e.action == action) return e.phrase;
  }
  return "stop";
}

std::optional<Action> action_from_phrase(std::string_view phrase) {
  for (const auto& e : kPhraseTable) {
    if (e.phrase == phrase) return e.action;
  }
  return std::nullopt;
}

void QARecord::validate() const {
  auto fail = [&](const std::string& msg) {
    throw ValidationError("qa record " + episode_id + "#" + std::to_string(step_index) + ": " + msg);
  };
  if (rounds.size() != kRoundNames.size()) fail("expected 6 rounds");
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    if (static_cast<std::size_t>(rounds[i].kind) != i) fail("rounds out of order");
  }
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!in_unit(confidence)) fail("confidence outside [0, 1]");
  if (!in_unit(detection_confidence)) fail("detection_confidence outside [0, 1]");
  if (!in_unit(alignment_score)) fail("alignment_score outside [0, 1]");
  if (!in_unit(inferred_room.confidence)) fail("room confidence outside [0, 1]");
  for (const auto& [name, score] : relevance_scores) {
    if (!in_unit(score)) fail("relevance of " + name + " outside [0, 1]");
  }
  const auto mapped = action_from_phrase(rounds.back().answer);
  if (!mapped || *mapped != suggestion.action) fail("action round does not map to the suggested action");
  if (context.step_index != step_index) fail("context step index mismatch");
}

std::vector<VisibleObject> inject_noise(const std::vector<VisibleObject>& objects, double noise, Rng& rng,
                                        const CategoryVocab& vocab) {
  std::vector<VisibleObject> out;
  for (const auto& o : objects) {
    if (!rng.bernoulli(noise)) {
      out.push_back(o);
      continue;
    }
    if (rng.bernoulli(0.5)) continue;  // dropped
    VisibleObject wrong = o;
    const auto truth = vocab.find(o.category);
    std::size_t pick = rng.index(vocab.size() - 1);
    if (truth && pick >= *truth) ++pick;
    wrong.category = vocab.name(pick);
    out.push_back(std::move(wrong));
  }
  return out;
}

double detection_recall(const std::vector<VisibleObject>& truth, const std::vector<VisibleObject>& reported) {
  if (truth.empty()) return reported.empty() ? 1.0 : 0.0;
  std::size_t matched = 0;
  for (const auto& t : truth) {
    const bool found = std::any_of(reported.begin(), reported.end(), [&](const auto& r) {
      return r.instance_id == t.instance_id && r.category == t.category;
    });
    matched += found ? 1 : 0;
  }
  return static_cast<double>(matched) / static_cast<double>(truth.size());
}

std::vector<std::string> parse_objects_reply(std::string_view reply) {
  for (auto line : lines_of(reply)) {
    line = trim(line);
    if (line.rfind("OBJECTS:", 0) != 0) continue;
    auto rest = trim(line.substr(8));
    std::vector<std::string> out;
    if (rest == "none" || rest.empty()) return out;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      auto end = rest.find(',', pos);
      if (end == std::string_view::npos) end = rest.size();
      auto item = trim(rest.substr(pos, end - pos));
      if (!item.empty()) out.emplace_back(item);
      pos = end + 1;
    }
    return out;
  }
  throw AnnotationError("detection reply has no 'OBJECTS:' line", std::string(reply));
}

Action parse_action_reply(std::string_view reply) {
  std::string_view last;
  for (auto line : lines_of(reply)) {
    line = trim(line);
    if (line.empty() || line.rfind("```", 0) == 0) continue;
    last = line;
  }
  if (last.size() >= 2 && last.front() == '`' && last.back() == '`') last = trim(last.substr(1, last.size() - 2));
  if (last.rfind("ACTION:", 0) != 0) {
    throw AnnotationError("planning reply must end with 'ACTION: <name>'", std::string(reply));
  }
  const auto name = trim(last.substr(7));
  auto action = parse_action(name);
  if (!action) throw AnnotationError("unknown action '" + std::string(name) + "' in planning reply", std::string(reply));
  return *action;
}

Detection detect_subgoals(const Observation& observation, const AnnotatorBackend& backend,
                          const std::vector<VisibleObject>* reported, const CategoryVocab& vocab) {
  const auto& shown = reported ? *reported : observation.visible_objects;
  Detection d;
  if (std::holds_alternative<RuleBackend>(backend)) {
    d.objects = shown;
    d.detection_confidence = detection_recall(observation.visible_objects, shown);
    d.text = describe_objects(shown);
    return d;
  }
  const auto& chat = std::get<ChatBackend>(backend);
  const std::string reply = chat.client->complete({detection_prompt(observation, shown, vocab), "", chat.temperature});
  const auto listed = parse_objects_reply(reply);
  std::vector<bool> used(observation.visible_objects.size(), false);
  std::size_t matched = 0;
  for (const auto& name : listed) {
    bool grounded = false;
    for (std::size_t i = 0; i < observation.visible_objects.size(); ++i) {
      if (used[i] || observation.visible_objects[i].category != name) continue;
      used[i] = true;
      d.objects.push_back(observation.visible_objects[i]);
      grounded = true;
      ++matched;
      break;
    }
    if (!grounded) d.objects.push_back({-1, name, 0.0, 0.0, Cell{-1, -1}});
  }
  if (listed.empty()) {
    d.detection_confidence = observation.visible_objects.empty() ? 1.0 : 0.0;
  } else {
    d.detection_confidence = static_cast<double>(matched) / static_cast<double>(listed.size());
  }
  d.text = std::string(trim(reply));
  return d;
}

RoomInference infer_room(const std::vector<std::string>& subgoals, const CooccurrencePriors& priors,
                         const CategoryVocab& vocab) {
  std::vector<std::size_t> known;
  for (const auto& s : subgoals) {
    if (auto i = vocab.find(s)) known.push_back(*i);
  }
  if (known.empty()) return {RoomType::unknown, 0.0};
  std::array<double, kNumRoomTypes> score{};
  for (std::size_t r = 0; r < kNumRoomTypes; ++r) {
    for (std::size_t c : known) score[r] += std::log(priors.object_room[c][r] + kLogPriorEpsilon);
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < kNumRoomTypes; ++r) {
    if (score[r] > score[best]) best = r;
  }
  double z = 0.0;
  for (double s : score) z += std::exp(s - score[best]);
  return {room_type_at(best), 1.0 / z};
}

std::map<std::string, double> associate_objects(const std::vector<std::string>& subgoals, std::string_view target,
                                                const CooccurrencePriors& priors, const CategoryVocab& vocab) {
  const std::size_t t = vocab.index_of(target);
  std::map<std::string, double> out;
  for (const auto& s : subgoals) {
    if (auto i = vocab.find(s)) out[s] = priors.proximity(*i, t);
  }
  return out;
}

Suggestion plan_suggestion(const RoomInference& room, const std::map<std::string, double>& relevance,
                           const Observation& perceived, const MapMemory& memory, const CooccurrencePriors& priors,
                           const AnnotatorConfig& config, const CategoryVocab& vocab) {
  constexpr TurnBias bias = TurnBias::left;
  const auto& target = perceived.target_category;
  const bool target_visible = perceived.sees(target);
  const auto targets = memory.sightings_of(target);
  const Cell here = perceived.pose.position;

  if (target_visible && !targets.empty()) {
    const auto hops = known_hops(memory, here, targets);
    if (hops && *hops <= config.success_radius_cells) return {SuggestionKind::stop_here, "stop here", Action::stop};
  }
  if (!targets.empty()) {
    if (auto a = approach_action(memory, perceived.pose, targets, config.success_radius_cells, target_visible, bias)) {
      return {SuggestionKind::approach, "approach the " + target, *a};
    }
  }

  const bool plausible = priors.room(vocab.index_of(target), room.room) >= config.plausibility_threshold;
  if (plausible) {
    // Most relevant grounded subgoal, ties to the alphabetically first name.
    std::optional<std::string> best;
    double best_score = -1.0;
    for (const auto& [name, score] : relevance) {
      if (name == target || score < config.relevance_gate || score <= best_score) continue;
      if (memory.sightings_of(name).empty()) continue;
      best = name;
      best_score = score;
    }
    if (best) {
      const auto anchors = memory.sightings_of(*best);
      auto passable = [&](Cell c) { return memory.known_floor(c); };
      const auto near = bfs_distances(memory.size(), anchors, passable);
      std::vector<Cell> goals;
      for (std::size_t i = 0; i < near.size(); ++i) {
        if (near[i] != kUnreached && near[i] <= config.success_radius_cells) goals.push_back(memory.size().cell(i));
      }
      const auto nav = step_toward(memory, perceived.pose, goals, bias);
      if (nav.kind == NavStep::Kind::act) return {SuggestionKind::search_near, "search near the " + *best, nav.action};
    }
  }

  if (auto a = explore_action(memory, perceived.pose, bias)) {
    return {SuggestionKind::explore, "explore another room", *a};
  }
  return {SuggestionKind::target_absent, "target likely absent", Action::stop};
}

double action_alignment(Action suggested, Action label) {
  if (suggested == label) return 1.0;
  auto rotation = [](Action a) { return a == Action::turn_left || a == Action::turn_right; };
  auto pitch = [](Action a) { return a == Action::look_up || a == Action::look_down; };
  if ((rotation(suggested) && rotation(label)) || (pitch(suggested) && pitch(label))) return 0.5;
  return 0.0;
}

double score_confidence(Action suggested, Action label, double detection_confidence, double detection_weight,
                        double alignment_weight) {
  const double c = detection_weight * detection_confidence + alignment_weight * action_alignment(suggested, label);
  return std::clamp(c, 0.0, 1.0);
}

QARecord annotate_step(const Observation& observation, std::optional<Action> previous_action, MapMemory& memory,
                       const AnnotatorBackend& backend, const CooccurrencePriors& priors,
                       const AnnotatorConfig& config, Rng* noise_rng, const CategoryVocab& vocab) {
  std::vector<VisibleObject> reported = observation.visible_objects;
  if (noise_rng && config.noise > 0.0) reported = inject_noise(observation.visible_objects, config.noise, *noise_rng, vocab);
  const Detection detection = detect_subgoals(observation, backend, &reported, vocab);

  memory.integrate_cells(observation);
  for (const auto& o : detection.objects) {
    if (memory.size().contains(o.cell)) memory.add_sighting({o.category, o.cell});
  }
  const auto in = planning_inputs(observation, detection, memory, priors, config, vocab);
  Suggestion suggestion;
  if (std::holds_alternative<RuleBackend>(backend)) {
    suggestion = plan_suggestion(in.room, in.relevance, in.perceived, memory, priors, config, vocab);
  } else {
    suggestion = chat_suggestion(std::get<ChatBackend>(backend), planning_prompt(in, detection));
  }
  return compose_record(observation, previous_action, detection, in, suggestion, suggestion.action, config);
}

std::vector<QARecord> annotate_trajectory(const Trajectory& trajectory, const AnnotatorBackend& backend,
                                          const CooccurrencePriors& priors, const AnnotatorConfig& config,
                                          const CategoryVocab& vocab) {
  const auto& steps = trajectory.steps;
  const std::size_t n = steps.size();
  const std::string& episode_id = trajectory.episode.episode_id;

  Rng noise_rng(mix_seed(config.seed, stable_hash(episode_id)));
  std::vector<std::vector<VisibleObject>> reported(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& objs = steps[i].observation.visible_objects;
    reported[i] = config.noise > 0.0 ? inject_noise(objs, config.noise, noise_rng, vocab) : objs;
  }

  auto with_context = [&](std::size_t i, auto&& fn) {
    try {
      fn();
    } catch (const AnnotationError& e) {
      throw AnnotationError(episode_id + " step " + std::to_string(i) + ": " + e.what(), e.raw_response());
    } catch (const Error& e) {
      throw AnnotationError(episode_id + " step " + std::to_string(i) + ": " + e.what(), "");
    }
  };

  const bool chat = std::holds_alternative<ChatBackend>(backend);
  std::vector<Detection> detections(n);
  detail::bounded_parallel_for(n, chat ? config.max_in_flight : 1, [&](std::size_t i) {
    with_context(i, [&] { detections[i] = detect_subgoals(steps[i].observation, backend, &reported[i], vocab); });
  });

  MapMemory memory(GridSize{0, 0});
  {
    int max_x = 0;
    int max_y = 0;
    auto grow = [&](Cell c) {
      max_x = std::max(max_x, c.x);
      max_y = std::max(max_y, c.y);
    };
    for (const auto& s : steps) {
      grow(s.observation.pose.position);
      for (const auto& c : s.observation.visible_cells) grow(c.cell);
    }
    memory = MapMemory(GridSize{max_x + 2, max_y + 2});
  }

  std::vector<PlanningInputs> inputs(n);
  std::vector<Suggestion> suggestions(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& obs = steps[i].observation;
    with_context(i, [&] {
      memory.integrate_cells(obs);
      for (const auto& o : detections[i].objects) {
        if (memory.size().contains(o.cell)) memory.add_sighting({o.category, o.cell});
      }
      inputs[i] = planning_inputs(obs, detections[i], memory, priors, config, vocab);
      if (!chat) {
        suggestions[i] = plan_suggestion(inputs[i].room, inputs[i].relevance, inputs[i].perceived, memory, priors,
                                         config, vocab);
      }
    });
  }
  if (chat) {
    const auto& cb = std::get<ChatBackend>(backend);
    detail::bounded_parallel_for(n, config.max_in_flight, [&](std::size_t i) {
      with_context(i, [&] { suggestions[i] = chat_suggestion(cb, planning_prompt(inputs[i], detections[i])); });
    });
  }

  std::vector<QARecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<Action> previous;
    if (i > 0) previous = steps[i - 1].action;
    auto r = compose_record(steps[i].observation, previous, detections[i], inputs[i], suggestions[i], steps[i].action,
                            config);
    r.episode_id = episode_id;
    records.push_back(std::move(r));
  }
  return records;
}

OrderedJson qa_record_to_json(const QARecord& r) {
  OrderedJson j;
  j["episode_id"] = r.episode_id;
  j["step_index"] = r.step_index;
  OrderedJson ctx;
  ctx["target_category"] = r.context.target_category;
  ctx["visible_categories"] = r.context.visible_categories;
  ctx["pitch"] = r.context.pitch;
  ctx["step_index"] = r.context.step_index;
  ctx["previous_action"] = r.context.previous_action ? OrderedJson(to_string(*r.context.previous_action)) : OrderedJson();
  j["context"] = std::move(ctx);
  auto& rounds = j["rounds"] = OrderedJson::array();
  for (const auto& round : r.rounds) {
    OrderedJson rj;
    rj["kind"] = to_string(round.kind);
    rj["question"] = round.question;
    rj["answer"] = round.answer;
    rj["payload"] = OrderedJson::parse(round.payload.dump());
    rounds.push_back(std::move(rj));
  }
  j["relevance_scores"] = OrderedJson::object();
  for (const auto& [name, score] : r.relevance_scores) j["relevance_scores"][name] = score;
  j["inferred_room"] = {{"room", to_string(r.inferred_room.room)}, {"confidence", r.inferred_room.confidence}};
  j["suggestion"] = {{"kind", to_string(r.suggestion.kind)}, {"text", r.suggestion.text}};
  j["suggested_action"] = to_string(r.suggestion.action);
  j["label_action"] = to_string(r.label_action);
  j["confidence"] = r.confidence;
  j["detection_confidence"] = r.detection_confidence;
  j["alignment_score"] = r.alignment_score;
  return j;
}

QARecord qa_record_from_json(const Json& j) {
  auto action_of = [](const Json& v) {
    auto a = parse_action(v.get<std::string>());
    if (!a) throw ParseError("qa: unknown action " + v.get<std::string>());
    return *a;
  };
  QARecord r;
  try {
    r.episode_id = j.at("episode_id").get<std::string>();
    r.step_index = j.at("step_index").get<int>();
    const auto& ctx = j.at("context");
    r.context.target_category = ctx.at("target_category").get<std::string>();
    r.context.visible_categories = ctx.at("visible_categories").get<std::vector<std::string>>();
    r.context.pitch = ctx.at("pitch").get<int>();
    r.context.step_index = ctx.at("step_index").get<int>();
    if (!ctx.at("previous_action").is_null()) r.context.previous_action = action_of(ctx.at("previous_action"));
    for (const auto& rj : j.at("rounds")) {
      auto kind = parse_round_kind(rj.at("kind").get<std::string>());
      if (!kind) throw ParseError("qa: unknown round kind");
      r.rounds.push_back({*kind, rj.at("question").get<std::string>(), rj.at("answer").get<std::string>(),
                          rj.at("payload")});
    }
    for (const auto& [name, score] : j.at("relevance_scores").items()) r.relevance_scores[name] = score.get<double>();
    auto room = parse_room_type(j.at("inferred_room").at("room").get<std::string>());
    if (!room) throw ParseError("qa: unknown room type");
    r.inferred_room = {*room, j.at("inferred_room").at("confidence").get<double>()};
    auto kind = parse_suggestion_kind(j.at("suggestion").at("kind").get<std::string>());
    if (!kind) throw ParseError("qa: unknown suggestion kind");
    r.suggestion.kind = *kind;
    r.suggestion.text = j.at("suggestion").at("text").get<std::string>();
    r.suggestion.action = action_of(j.at("suggested_action"));
    r.label_action = action_of(j.at("label_action"));
    r.confidence = j.at("confidence").get<double>();
    r.detection_confidence = j.at("detection_confidence").get<double>();
    r.alignment_score = j.at("alignment_score").get<double>();
  } catch (const Json::exception& e) {
    throw ParseError(std::string("qa: ") + e.what());
  }
  r.validate();
  return r;
}

std::string format_qa_dataset(const std::vector<QARecord>& records, std::string_view manifest_hash) {
  std::vector<OrderedJson> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(qa_record_to_json(r));
  return make_jsonl(jsonl_header("qa_records", kQaFormatVersion, manifest_hash), rows);
}

std::vector<QARecord> parse_qa_dataset(std::string_view text) {
  auto doc = parse_jsonl(text, "qa_records");
  std::vector<QARecord> out;
  out.reserve(doc.records.size());
  for (const auto& r : doc.records) out.push_back(qa_record_from_json(r));
  return out;
}

void save_qa_dataset(const std::vector<QARecord>& records, const std::filesystem::path& path,
                     std::string_view manifest_hash) {
  write_file(path, format_qa_dataset(records, manifest_hash));
}

std::vector<QARecord> load_qa_dataset(const std::filesystem::path& path) { return parse_qa_dataset(read_file(path)); }

}  // namespace cotnav
