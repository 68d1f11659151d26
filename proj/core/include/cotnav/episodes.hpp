#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cotnav/io.hpp"
#include "cotnav/scene.hpp"
#include "cotnav/simulator.hpp"

namespace cotnav {

inline constexpr int kEpisodeFormatVersion = 1;
inline constexpr int kSplitFormatVersion = 1;

/// Meters from `from` to the nearest cell within the success radius (in
/// hops) of any instance of `category`, via 4-connected BFS over floor cells.
/// Throws UnsatisfiableEpisodeError if the category is absent and
/// UnreachableError if no eligible cell can be reached.
double geodesic_distance(const Scene& scene, Cell from, std::string_view category, const SimConfig& config = {});

/// Uniform floor-cell starts and headings with targets drawn uniformly from
/// `categories`. Starts already inside the success radius are resampled.
std::vector<Episode> sample_episodes(const Scene& scene, const std::vector<std::string>& categories, int count,
                                     std::uint64_t seed, const SimConfig& config = {});

enum class SplitMode : std::uint8_t { object_gen, scene_gen };

std::string_view to_string(SplitMode mode);
SplitMode parse_split_mode(std::string_view name);

/// Train/test partition. Scenes are always split 80/20. object_gen also holds
/// out five categories; in scene_gen every category is seen and
/// unseen_categories is empty.
struct SplitConfig {
  SplitMode mode = SplitMode::object_gen;
  std::vector<std::string> seen_categories;
  std::vector<std::string> unseen_categories;
  std::vector<std::string> train_scenes;
  std::vector<std::string> test_scenes;

  /// Categories eligible as evaluation targets.
  const std::vector<std::string>& eval_categories() const {
    return mode == SplitMode::object_gen ? unseen_categories : seen_categories;
  }
  /// Throws ValidationError if a disjointness or coverage condition fails.
  void validate(const CategoryVocab& vocab = CategoryVocab::standard()) const;

  bool operator==(const SplitConfig&) const = default;
};

SplitConfig make_splits(const std::vector<std::string>& scene_ids, const CategoryVocab& vocab, SplitMode mode,
                        std::uint64_t seed);

OrderedJson pose_to_json(const AgentPose& pose);
AgentPose pose_from_json(const Json& j);
OrderedJson episode_to_json(const Episode& episode);
Episode episode_from_json(const Json& j);

std::string format_episodes(const std::vector<Episode>& episodes, std::string_view manifest_hash = "");
std::vector<Episode> parse_episodes(std::string_view text);
void save_episodes(const std::vector<Episode>& episodes, const std::filesystem::path& path,
                   std::string_view manifest_hash = "");
std::vector<Episode> load_episodes(const std::filesystem::path& path);

std::string format_split(const SplitConfig& split, std::string_view manifest_hash = "");
SplitConfig parse_split(std::string_view text);
SplitConfig load_split(const std::filesystem::path& path);

}  // namespace cotnav
