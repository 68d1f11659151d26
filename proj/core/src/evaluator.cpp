#include "cotnav/evaluator.hpp"

#include <algorithm>
#include <cstdio>

#include "cotnav/errors.hpp"
#include "cotnav/map_memory.hpp"
#include "cotnav/random.hpp"
#include "parallel.hpp"

namespace cotnav {
namespace {

const Scene& scene_by_id(const std::vector<Scene>& scenes, std::string_view id) {
  for (const auto& s : scenes) {
    if (s.id == id) return s;
  }
  throw ValidationError("evaluation: unknown scene " + std::string(id));
}

EpisodeResult finish(const Scene& scene, const Episode& episode, const EpisodeState& state, std::vector<Cell> visited,
                     const SimConfig& config) {
  EpisodeResult r;
  r.episode_id = episode.episode_id;
  r.scene_id = episode.scene_id;
  r.target_category = episode.target_category;
  r.status = state.status;
  r.success = state.status == EpisodeStatus::success;
  r.l_m = episode.geodesic_l_m;
  r.p_m = state.path_length_m;
  r.steps = state.steps_taken;
  r.start_distance_m = episode.geodesic_l_m;
  r.final_distance_m = geodesic_distance(scene, state.pose.position, episode.target_category, config);
  r.visited = std::move(visited);
  return r;
}

}  // namespace

EpisodeResult run_episode_with(const Scene& scene, const Episode& episode, const ActionChooser& choose,
                               const CooccurrencePriors& priors, const EvalConfig& config,
                               const CategoryVocab& vocab) {
  AnnotatorConfig live = config.annotator;
  live.noise = 0.0;
  live.success_radius_cells = config.sim.success_radius_cells;
  const AnnotatorBackend backend = RuleBackend{};

  EpisodeState state = reset(scene, episode, config.sim);
  Observation obs = observe(scene, state);
  MapMemory memory(scene.size());
  std::vector<Cell> visited{state.pose.position};
  std::optional<Action> previous;
  while (!state.terminal()) {
    auto record = annotate_step(obs, previous, memory, backend, priors, live, nullptr, vocab);
    record.episode_id = episode.episode_id;
    const Action action = choose(obs, record);
    auto next = step(scene, state, action, config.sim);
    state = std::move(next.state);
    obs = std::move(next.observation);
    visited.push_back(state.pose.position);
    previous = action;
  }
  return finish(scene, episode, state, std::move(visited), config.sim);
}

EpisodeResult run_episode(const PolicyParams& params, const FeatureSpec& spec, const Scene& scene,
                          const Episode& episode, const CooccurrencePriors& priors, const EvalConfig& config,
                          const CategoryVocab& vocab) {
  if (params.dim != spec.dim()) throw ValidationError("evaluation: policy dimension does not match feature set");
  auto choose = [&](const Observation&, const QARecord& record) {
    return predict(params, featurize(record, vocab, spec).features).action;
  };
  return run_episode_with(scene, episode, choose, priors, config, vocab);
}

EpisodeResult run_random_episode(const Scene& scene, const Episode& episode, std::uint64_t seed,
                                 const CooccurrencePriors&, const EvalConfig& config, const CategoryVocab&) {
  Rng rng(seed);
  EpisodeState state = reset(scene, episode, config.sim);
  std::vector<Cell> visited{state.pose.position};
  while (!state.terminal()) {
    state = step(scene, state, action_at(rng.index(kNumActions)), config.sim).state;
    visited.push_back(state.pose.position);
  }
  return finish(scene, episode, state, std::move(visited), config.sim);
}

double spl_term(const EpisodeResult& r) {
  if (!r.success) return 0.0;
  const double denom = std::max(r.l_m, r.p_m);
  return denom > 0.0 ? r.l_m / denom : 0.0;
}

double soft_spl_term(const EpisodeResult& r) {
  if (r.start_distance_m <= 0.0) return 0.0;
  const double progress = std::max(0.0, 1.0 - r.final_distance_m / r.start_distance_m);
  const double denom = std::max(r.l_m, r.p_m);
  return denom > 0.0 ? progress * r.l_m / denom : 0.0;
}

Metrics compute_metrics(const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw ValidationError("metrics: no episode results");
  // Sum in a canonical order so the output does not depend on input order.
  std::vector<std::array<double, 3>> terms;
  terms.reserve(results.size());
  for (const auto& r : results) terms.push_back({r.success ? 1.0 : 0.0, spl_term(r), soft_spl_term(r)});
  std::sort(terms.begin(), terms.end());
  Metrics m;
  m.n = results.size();
  for (const auto& t : terms) {
    m.sr += t[0];
    m.spl += t[1];
    m.soft_spl += t[2];
  }
  const auto n = static_cast<double>(m.n);
  m.sr /= n;
  m.spl /= n;
  m.soft_spl /= n;
  return m;
}

std::vector<Cell> shortest_route(const Scene& scene, Cell from, std::string_view category, const SimConfig& config) {
  const auto instances = scene.instances_of(category);
  if (instances.empty()) return {};
  auto floor = [&](Cell c) { return scene.is_floor(c); };
  const auto near = bfs_distances(scene.size(), instances, floor);
  std::vector<Cell> goals;
  for (std::size_t i = 0; i < near.size(); ++i) {
    if (near[i] != kUnreached && near[i] <= config.success_radius_cells) goals.push_back(scene.size().cell(i));
  }
  const auto dist = bfs_distances(scene.size(), goals, floor);
  if (!scene.in_bounds(from) || dist[scene.size().index(from)] == kUnreached) return {};
  std::vector<Cell> route{from};
  Cell at = from;
  while (dist[scene.size().index(at)] > 0) {
    for (Direction d : kDirections) {
      const Cell n = neighbor(at, d);
      if (scene.in_bounds(n) && dist[scene.size().index(n)] == dist[scene.size().index(at)] - 1) {
        at = n;
        break;
      }
    }
    route.push_back(at);
  }
  return route;
}

std::vector<Episode> split_episodes(const SplitConfig& split, const std::vector<Scene>& scenes,
                                    int episodes_per_scene, std::uint64_t seed, const SimConfig& config) {
  split.validate();
  const auto& eligible = split.eval_categories();
  std::vector<Episode> out;
  for (std::size_t k = 0; k < split.test_scenes.size(); ++k) {
    const Scene& scene = scene_by_id(scenes, split.test_scenes[k]);
    std::vector<std::string> present;
    for (const auto& c : eligible) {
      if (scene.has_category(c)) present.push_back(c);
    }
    if (present.empty()) continue;
    auto eps = sample_episodes(scene, present, episodes_per_scene, mix_seed(seed, k), config);
    out.insert(out.end(), eps.begin(), eps.end());
  }
  // Guard the protocol on every emitted episode.
  for (const auto& e : out) {
    if (std::find(eligible.begin(), eligible.end(), e.target_category) == eligible.end()) {
      throw ValidationError("evaluation: episode " + e.episode_id + " targets a training category");
    }
    if (std::find(split.train_scenes.begin(), split.train_scenes.end(), e.scene_id) != split.train_scenes.end()) {
      throw ValidationError("evaluation: episode " + e.episode_id + " uses a training scene");
    }
  }
  if (out.empty()) throw UnsatisfiableEpisodeError("evaluation: no satisfiable episodes for this split");
  return out;
}

EvalReport evaluate_episodes(const PolicyUnderTest& policy, const std::vector<Episode>& episodes,
                             const std::vector<Scene>& scenes, const CooccurrencePriors& priors,
                             const EvalConfig& config, int workers, const CategoryVocab& vocab) {
  if (episodes.empty()) throw ValidationError("evaluation: no episodes");
  EvalReport report;
  report.episodes = episodes;
  report.results.resize(episodes.size());
  detail::bounded_parallel_for(episodes.size(), workers > 0 ? workers : detail::default_workers(),
                               [&](std::size_t i) {
                                 const Scene& scene = scene_by_id(scenes, episodes[i].scene_id);
                                 if (policy.model) {
                                   report.results[i] = run_episode(policy.model->params, policy.model->spec, scene,
                                                                   episodes[i], priors, config, vocab);
                                 } else {
                                   report.results[i] = run_random_episode(
                                       scene, episodes[i], mix_seed(policy.random_seed, i), priors, config, vocab);
                                 }
                               });
  report.metrics = compute_metrics(report.results);
  return report;
}

EvalReport evaluate_split(const PolicyUnderTest& policy, const SplitConfig& split, const std::vector<Scene>& scenes,
                          int episodes_per_scene, std::uint64_t seed, const CooccurrencePriors& priors,
                          const EvalConfig& config, int workers, const CategoryVocab& vocab) {
  const auto episodes = split_episodes(split, scenes, episodes_per_scene, seed, config.sim);
  return evaluate_episodes(policy, episodes, scenes, priors, config, workers, vocab);
}

std::string format_eval_results(const EvalReport& report, const std::vector<Scene>& scenes,
                                std::string_view manifest_hash, const SimConfig& config) {
  auto cells_json = [](const std::vector<Cell>& cells) {
    OrderedJson arr = OrderedJson::array();
    for (const auto& c : cells) arr.push_back({c.x, c.y});
    return arr;
  };
  std::vector<OrderedJson> rows;
  for (std::size_t i = 0; i < report.results.size(); ++i) {
    const auto& r = report.results[i];
    const auto& e = report.episodes.at(i);
    const Scene& scene = scene_by_id(scenes, e.scene_id);
    OrderedJson j;
    j["episode_id"] = r.episode_id;
    j["scene_id"] = r.scene_id;
    j["target_category"] = r.target_category;
    j["status"] = to_string(r.status);
    j["success"] = r.success ? 1 : 0;
    j["l_m"] = r.l_m;
    j["p_m"] = r.p_m;
    j["steps"] = r.steps;
    j["start_distance_m"] = r.start_distance_m;
    j["final_distance_m"] = r.final_distance_m;
    j["spl"] = spl_term(r);
    j["soft_spl"] = soft_spl_term(r);
    j["visited"] = cells_json(r.visited);
    j["shortest_route"] = cells_json(shortest_route(scene, e.start_pose.position, e.target_category, config));
    rows.push_back(std::move(j));
  }
  return make_jsonl(jsonl_header("eval_results", kReportFormatVersion, manifest_hash), rows);
}

std::string format_eval_summary(const EvalReport& report, std::string_view policy_label, std::string_view split_mode,
                                std::string_view manifest_hash) {
  OrderedJson j;
  j["kind"] = "eval_summary";
  j["format_version"] = kReportFormatVersion;
  j["manifest_hash"] = std::string(manifest_hash);
  j["policy"] = std::string(policy_label);
  j["split"] = std::string(split_mode);
  j["n"] = report.metrics.n;
  j["sr"] = report.metrics.sr;
  j["spl"] = report.metrics.spl;
  j["soft_spl"] = report.metrics.soft_spl;
  return j.dump(1) + "\n";
}

const std::vector<AblationVariant>& ablation_ladder() {
  static const std::vector<AblationVariant> ladder = {
      {"Pure Text", FeatureSet::pure_text, LossMode::ce},
      {"Standard CoT", FeatureSet::cot, LossMode::ce},
      {"H-CoT", FeatureSet::hcot, LossMode::ce},
      {"H-CoT + Closed-Loop", FeatureSet::hcot, LossMode::adaptive},
  };
  return ladder;
}

std::vector<AblationRow> run_ablation(const std::vector<QARecord>& dataset, const SplitConfig& split,
                                      const std::vector<Scene>& scenes, const CooccurrencePriors& priors,
                                      const AblationConfig& config, const CategoryVocab& vocab) {
  if (dataset.empty()) throw ValidationError("ablation: dataset is empty");
  const auto episodes = split_episodes(split, scenes, config.episodes_per_scene, config.eval_seed, config.eval.sim);
  std::vector<AblationRow> rows;
  for (const auto& variant : ablation_ladder()) {
    const FeatureSpec spec{variant.features};
    TrainConfig tc = config.train;
    tc.loss = variant.loss;
    auto trained = train(featurize_all(dataset, vocab, spec), tc);
    PolicyUnderTest policy{PolicyModel{std::move(trained.params), spec, tc, vocab.hash()}, 0, variant.label};
    const auto report = evaluate_episodes(policy, episodes, scenes, priors, config.eval, config.workers, vocab);
    rows.push_back({variant, report.metrics});
  }
  return rows;
}

std::string format_ablation_text(const std::vector<AblationRow>& rows) {
  std::string out = "variant                 features   loss       SR      SPL     SoftSPL\n";
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-23s %-10s %-9s %6.1f%% %6.1f%% %6.1f%%\n", r.variant.label.c_str(),
                  std::string(to_string(r.variant.features)).c_str(), std::string(to_string(r.variant.loss)).c_str(),
                  100.0 * r.metrics.sr, 100.0 * r.metrics.spl, 100.0 * r.metrics.soft_spl);
    out += line;
  }
  return out;
}

std::string format_ablation_rows(const std::vector<AblationRow>& rows, std::string_view manifest_hash) {
  std::vector<OrderedJson> out;
  for (const auto& r : rows) {
    OrderedJson j;
    j["variant"] = r.variant.label;
    j["features"] = to_string(r.variant.features);
    j["loss"] = to_string(r.variant.loss);
    j["n"] = r.metrics.n;
    j["sr"] = r.metrics.sr;
    j["spl"] = r.metrics.spl;
    j["soft_spl"] = r.metrics.soft_spl;
    out.push_back(std::move(j));
  }
  return make_jsonl(jsonl_header("ablation", kReportFormatVersion, manifest_hash), out);
}

}  // namespace cotnav
