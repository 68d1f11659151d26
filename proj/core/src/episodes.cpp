#include "cotnav/episodes.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cotnav/errors.hpp"
#include "cotnav/io.hpp"
#include "cotnav/random.hpp"

namespace cotnav {

double geodesic_distance(const Scene& scene, Cell from, std::string_view category, const SimConfig& config) {
  if (!scene.is_floor(from)) throw InvalidEpisodeError("geodesic_distance: start is not a floor cell");
  const auto instances = scene.instances_of(category);
  if (instances.empty()) {
    throw UnsatisfiableEpisodeError("category '" + std::string(category) + "' is absent from scene " + scene.id);
  }
  auto floor = [&](Cell c) { return scene.is_floor(c); };
  // Success-eligible cells: within the radius (in hops) of some instance.
  const auto from_instances = bfs_distances(scene.size(), instances, floor);
  std::vector<Cell> eligible;
  for (std::size_t i = 0; i < from_instances.size(); ++i) {
    if (from_instances[i] != kUnreached && from_instances[i] <= config.success_radius_cells) {
      eligible.push_back(scene.size().cell(i));
    }
  }
  const auto dist = bfs_distances(scene.size(), eligible, floor);
  const int hops = dist[scene.size().index(from)];
  if (hops == kUnreached) {
    throw UnreachableError("no instance of '" + std::string(category) + "' is reachable from (" +
                           std::to_string(from.x) + "," + std::to_string(from.y) + ") in scene " + scene.id);
  }
  return scene.cell_size_m * hops;
}

std::vector<Episode> sample_episodes(const Scene& scene, const std::vector<std::string>& categories, int count,
                                     std::uint64_t seed, const SimConfig& config) {
  if (count < 1) throw ValidationError("sample_episodes: count must be >= 1");
  if (categories.empty()) throw UnsatisfiableEpisodeError("sample_episodes: no target categories given");
  for (const auto& c : categories) {
    if (!scene.has_category(c)) {
      throw UnsatisfiableEpisodeError("category '" + c + "' is absent from scene " + scene.id);
    }
  }
  const auto floors = scene.floor_cells();
  Rng rng(seed);
  std::vector<Episode> out;
  const int max_attempts = 1000 * count;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > max_attempts) {
      throw UnsatisfiableEpisodeError("sample_episodes: could not find valid starts in scene " + scene.id);
    }
    const std::string& target = categories[rng.index(categories.size())];
    const Cell start = floors[rng.index(floors.size())];
    const int heading = static_cast<int>(rng.index(kNumHeadings));
    double l = 0.0;
    try {
      l = geodesic_distance(scene, start, target, config);
    } catch (const UnreachableError&) {
      continue;
    }
    if (!(l > 0.0) || !std::isfinite(l)) continue;
    Episode ep;
    ep.episode_id = scene.id + "/" + std::to_string(seed) + "/" + std::to_string(out.size());
    ep.scene_id = scene.id;
    ep.start_pose = {start, heading, 0};
    ep.target_category = target;
    ep.geodesic_l_m = l;
    out.push_back(std::move(ep));
  }
  return out;
}

std::string_view to_string(SplitMode mode) { return mode == SplitMode::object_gen ? "object_gen" : "scene_gen"; }

SplitMode parse_split_mode(std::string_view name) {
  if (name == "object_gen") return SplitMode::object_gen;
  if (name == "scene_gen") return SplitMode::scene_gen;
  throw ValidationError("unknown split mode '" + std::string(name) + "'");
}

void SplitConfig::validate(const CategoryVocab& vocab) const {
  auto disjoint = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return std::none_of(a.begin(), a.end(), [&](const auto& x) { return std::find(b.begin(), b.end(), x) != b.end(); });
  };
  if (!disjoint(seen_categories, unseen_categories)) {
    throw ValidationError("split: seen and unseen categories overlap");
  }
  std::set<std::string> all(seen_categories.begin(), seen_categories.end());
  all.insert(unseen_categories.begin(), unseen_categories.end());
  if (all.size() != vocab.size() || seen_categories.size() + unseen_categories.size() != vocab.size()) {
    throw ValidationError("split: seen and unseen categories must partition the vocabulary");
  }
  for (const auto& c : all) {
    if (!vocab.contains(c)) throw ValidationError("split: unknown category " + c);
  }
  if (train_scenes.empty() || test_scenes.empty()) throw ValidationError("split: empty scene list");
  if (!disjoint(train_scenes, test_scenes)) {
    throw ValidationError("split: train and test scenes overlap");
  }
  if (mode == SplitMode::object_gen && unseen_categories.empty()) {
    throw ValidationError("split: object_gen requires unseen categories");
  }
}

SplitConfig make_splits(const std::vector<std::string>& scene_ids, const CategoryVocab& vocab, SplitMode mode,
                        std::uint64_t seed) {
  if (scene_ids.size() < 2) throw ValidationError("make_splits: at least 2 scenes are required");
  if (vocab.size() != kNumCategories) throw VocabularyError("make_splits: vocabulary must have 21 categories");
  SplitConfig split;
  split.mode = mode;
  if (mode == SplitMode::object_gen) {
    const auto& unseen = unseen_categories();
    for (const auto& c : vocab.categories()) {
      const bool held_out = std::find(unseen.begin(), unseen.end(), c) != unseen.end();
      (held_out ? split.unseen_categories : split.seen_categories).push_back(c);
    }
  } else {
    split.seen_categories = vocab.categories();
  }
  // Both protocols hold out scenes, so each split satisfies both disjointness conditions.
  std::vector<std::string> shuffled = scene_ids;
  Rng rng(seed);
  rng.shuffle(std::span(shuffled));
  const auto n = shuffled.size();
  const auto test_count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * 0.2)), 1, n - 1);
  split.test_scenes.assign(shuffled.end() - static_cast<std::ptrdiff_t>(test_count), shuffled.end());
  split.train_scenes.assign(shuffled.begin(), shuffled.end() - static_cast<std::ptrdiff_t>(test_count));
  std::sort(split.train_scenes.begin(), split.train_scenes.end());
  std::sort(split.test_scenes.begin(), split.test_scenes.end());
  split.validate(vocab);
  return split;
}

OrderedJson pose_to_json(const AgentPose& p) {
  return {{"cell", {p.position.x, p.position.y}}, {"heading", p.heading}, {"pitch", p.pitch}};
}

AgentPose pose_from_json(const Json& j) {
  AgentPose p;
  const auto& c = j.at("cell");
  p.position = {c.at(0).get<int>(), c.at(1).get<int>()};
  p.heading = j.at("heading").get<int>();
  p.pitch = j.at("pitch").get<int>();
  return p;
}

OrderedJson episode_to_json(const Episode& e) {
  OrderedJson r;
  r["episode_id"] = e.episode_id;
  r["scene_id"] = e.scene_id;
  r["start_pose"] = pose_to_json(e.start_pose);
  r["target_category"] = e.target_category;
  r["geodesic_l_m"] = e.geodesic_l_m;
  return r;
}

Episode episode_from_json(const Json& j) {
  Episode e;
  e.episode_id = j.at("episode_id").get<std::string>();
  e.scene_id = j.at("scene_id").get<std::string>();
  e.start_pose = pose_from_json(j.at("start_pose"));
  e.target_category = j.at("target_category").get<std::string>();
  e.geodesic_l_m = j.at("geodesic_l_m").get<double>();
  return e;
}

std::string format_episodes(const std::vector<Episode>& episodes, std::string_view manifest_hash) {
  std::vector<OrderedJson> records;
  for (const auto& e : episodes) records.push_back(episode_to_json(e));
  return make_jsonl(jsonl_header("episodes", kEpisodeFormatVersion, manifest_hash), records);
}

std::vector<Episode> parse_episodes(std::string_view text) {
  auto doc = parse_jsonl(text, "episodes");
  std::vector<Episode> out;
  try {
    for (const auto& r : doc.records) {
      Episode e = episode_from_json(r);
      if (!(e.geodesic_l_m > 0.0) || !std::isfinite(e.geodesic_l_m)) {
        throw ValidationError("episode " + e.episode_id + ": geodesic_l_m must be positive and finite");
      }
      out.push_back(std::move(e));
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("episodes: ") + e.what());
  }
  return out;
}

void save_episodes(const std::vector<Episode>& episodes, const std::filesystem::path& path,
                   std::string_view manifest_hash) {
  write_file(path, format_episodes(episodes, manifest_hash));
}

std::vector<Episode> load_episodes(const std::filesystem::path& path) { return parse_episodes(read_file(path)); }

std::string format_split(const SplitConfig& split, std::string_view manifest_hash) {
  OrderedJson doc;
  doc["kind"] = "split";
  doc["format_version"] = kSplitFormatVersion;
  doc["manifest_hash"] = manifest_hash;
  doc["mode"] = to_string(split.mode);
  doc["seen_categories"] = split.seen_categories;
  doc["unseen_categories"] = split.unseen_categories;
  doc["train_scenes"] = split.train_scenes;
  doc["test_scenes"] = split.test_scenes;
  return doc.dump(1) + "\n";
}

SplitConfig parse_split(std::string_view text) {
  const Json doc = parse_json(text, "split");
  SplitConfig split;
  try {
    if (doc.at("kind") != "split" || doc.at("format_version").get<int>() != kSplitFormatVersion) {
      throw ParseError("split: wrong kind or format_version");
    }
    split.mode = parse_split_mode(doc.at("mode").get<std::string>());
    split.seen_categories = doc.at("seen_categories").get<std::vector<std::string>>();
    split.unseen_categories = doc.at("unseen_categories").get<std::vector<std::string>>();
    split.train_scenes = doc.at("train_scenes").get<std::vector<std::string>>();
    split.test_scenes = doc.at("test_scenes").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw ParseError(std::string("split: ") + e.what());
  }
  split.validate();
  return split;
}

SplitConfig load_split(const std::filesystem::path& path) { return parse_split(read_file(path)); }

}  // namespace cotnav
