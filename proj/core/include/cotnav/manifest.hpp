#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "cotnav/annotator.hpp"
#include "cotnav/episodes.hpp"
#include "cotnav/io.hpp"
#include "cotnav/policy.hpp"

namespace cotnav {

inline constexpr int kManifestFormatVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

struct ArtifactPaths {
  std::filesystem::path scenes_dir = "scenes";
  std::filesystem::path split = "split.json";
  std::filesystem::path episodes = "episodes.jsonl";
  std::filesystem::path demos = "demos.jsonl";
  std::filesystem::path human_demos = "human_demos.jsonl";
  std::filesystem::path qa = "qa.jsonl";
  std::filesystem::path model = "model.json";
  std::filesystem::path training_log = "training_log.jsonl";
  std::filesystem::path eval_results = "eval_results.jsonl";
  std::filesystem::path eval_summary = "eval_summary.json";
  std::filesystem::path ablation_text = "ablation.txt";
  std::filesystem::path ablation_rows = "ablation.jsonl";
};

/// Everything needed to regenerate a run. Relative artifact paths resolve
/// against `out_dir`, which itself resolves against the manifest's directory.
struct ExperimentManifest {
  std::string tool_version = std::string(kToolVersion);
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "cotnav-run";
  ArtifactPaths paths;
  std::filesystem::path priors;  // empty: built-in table

  int scene_count = 10;
  int scene_width = 16;
  int scene_height = 16;
  int room_count = 4;

  int episodes_per_scene = 12;
  SplitMode split_mode = SplitMode::scene_gen;

  AnnotatorConfig annotator;
  std::string annotator_backend = "rule";

  FeatureSet features = FeatureSet::hcot;
  TrainConfig train;

  int eval_episodes_per_scene = 25;
  int success_radius_cells = 1;

  /// Throws ValidationError naming the offending field.
  void validate() const;
  std::filesystem::path resolve(const std::filesystem::path& artifact) const;
};

OrderedJson manifest_to_json(const ExperimentManifest& manifest);
ExperimentManifest manifest_from_json(const Json& j, const std::filesystem::path& base_dir = {});
/// SHA-256 over the canonical serialization; embedded in every artifact header.
std::string manifest_hash(const ExperimentManifest& manifest);
ExperimentManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const ExperimentManifest& manifest, const std::filesystem::path& path);

}  // namespace cotnav
