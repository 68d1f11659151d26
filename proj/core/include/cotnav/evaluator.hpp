#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cotnav/annotator.hpp"
#include "cotnav/episodes.hpp"
#include "cotnav/policy.hpp"
#include "cotnav/priors.hpp"
#include "cotnav/scene.hpp"
#include "cotnav/simulator.hpp"

namespace cotnav {

inline constexpr int kReportFormatVersion = 1;

struct EpisodeResult {
  std::string episode_id;
  std::string scene_id;
  std::string target_category;
  bool success = false;
  EpisodeStatus status = EpisodeStatus::running;
  double l_m = 0.0;  // geodesic shortest path at the start
  double p_m = 0.0;  // realized path length
  int steps = 0;
  double start_distance_m = 0.0;
  double final_distance_m = 0.0;
  std::vector<Cell> visited;  // positions after reset and after every step

  bool operator==(const EpisodeResult&) const = default;
};

struct Metrics {
  std::size_t n = 0;
  double sr = 0.0;
  double spl = 0.0;
  double soft_spl = 0.0;

  bool operator==(const Metrics&) const = default;
};

/// Chooses the next action from the live observation and its single-step rule annotation.
using ActionChooser = std::function<Action(const Observation&, const QARecord&)>;

struct EvalConfig {
  SimConfig sim;
  AnnotatorConfig annotator;  // noise is ignored: live annotation is always clean
};

/// Generic driver: observe, annotate, choose, step until terminal.
EpisodeResult run_episode_with(const Scene& scene, const Episode& episode, const ActionChooser& choose,
                               const CooccurrencePriors& priors, const EvalConfig& config = {},
                               const CategoryVocab& vocab = CategoryVocab::standard());

/// Greedy rollout of a trained policy.
EpisodeResult run_episode(const PolicyParams& params, const FeatureSpec& spec, const Scene& scene,
                          const Episode& episode, const CooccurrencePriors& priors, const EvalConfig& config = {},
                          const CategoryVocab& vocab = CategoryVocab::standard());

/// Baseline drawing uniformly from the six actions.
EpisodeResult run_random_episode(const Scene& scene, const Episode& episode, std::uint64_t seed,
                                 const CooccurrencePriors& priors, const EvalConfig& config = {},
                                 const CategoryVocab& vocab = CategoryVocab::standard());

/// S_i * l_i / max(l_i, p_i).
double spl_term(const EpisodeResult& r);
double soft_spl_term(const EpisodeResult& r);

/// Throws ValidationError for an empty input.
Metrics compute_metrics(const std::vector<EpisodeResult>& results);

/// Cells of one shortest route from `from` into the success region of `category`.
std::vector<Cell> shortest_route(const Scene& scene, Cell from, std::string_view category, const SimConfig& config = {});

/// Evaluation episodes for a split: test scenes only, targets drawn from the
/// split's evaluation categories present in each scene.
std::vector<Episode> split_episodes(const SplitConfig& split, const std::vector<Scene>& scenes,
                                    int episodes_per_scene, std::uint64_t seed, const SimConfig& config = {});

struct EvalReport {
  Metrics metrics;
  std::vector<Episode> episodes;
  std::vector<EpisodeResult> results;
};

/// A trained policy, or the random baseline when `model` is empty.
struct PolicyUnderTest {
  std::optional<PolicyModel> model;
  std::uint64_t random_seed = 0;
  std::string label;
};

EvalReport evaluate_episodes(const PolicyUnderTest& policy, const std::vector<Episode>& episodes,
                             const std::vector<Scene>& scenes, const CooccurrencePriors& priors,
                             const EvalConfig& config = {}, int workers = 0,
                             const CategoryVocab& vocab = CategoryVocab::standard());

EvalReport evaluate_split(const PolicyUnderTest& policy, const SplitConfig& split, const std::vector<Scene>& scenes,
                          int episodes_per_scene, std::uint64_t seed, const CooccurrencePriors& priors,
                          const EvalConfig& config = {}, int workers = 0,
                          const CategoryVocab& vocab = CategoryVocab::standard());

/// Line-delimited per-episode results with traces and a shortest-route overlay.
std::string format_eval_results(const EvalReport& report, const std::vector<Scene>& scenes,
                                std::string_view manifest_hash = "", const SimConfig& config = {});
std::string format_eval_summary(const EvalReport& report, std::string_view policy_label, std::string_view split_mode,
                                std::string_view manifest_hash = "");

struct AblationVariant {
  std::string label;
  FeatureSet features;
  LossMode loss;
};

/// The four-step ladder: pure text, standard reasoning, hierarchical reasoning,
/// hierarchical reasoning with confidence weighting.
const std::vector<AblationVariant>& ablation_ladder();

struct AblationRow {
  AblationVariant variant;
  Metrics metrics;
};

struct AblationConfig {
  TrainConfig train;  // loss mode is overridden per variant
  int episodes_per_scene = 10;
  std::uint64_t eval_seed = 0;
  EvalConfig eval;
  int workers = 0;
};

std::vector<AblationRow> run_ablation(const std::vector<QARecord>& dataset, const SplitConfig& split,
                                      const std::vector<Scene>& scenes, const CooccurrencePriors& priors,
                                      const AblationConfig& config,
                                      const CategoryVocab& vocab = CategoryVocab::standard());

std::string format_ablation_text(const std::vector<AblationRow>& rows);
std::string format_ablation_rows(const std::vector<AblationRow>& rows, std::string_view manifest_hash = "");

}  // namespace cotnav
