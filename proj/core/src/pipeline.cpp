#include "cotnav/pipeline.hpp"

#include <filesystem>

#include "cotnav/errors.hpp"
#include "cotnav/random.hpp"

namespace cotnav {
namespace {

constexpr std::uint64_t kEvalSalt = 0xe7a1;
constexpr std::uint64_t kEpisodeSalt = 0xe915;
constexpr std::uint64_t kDemoSalt = 0xde70;
constexpr std::uint64_t kRandomPolicySalt = 0x7a4d;

std::vector<std::string> present_categories(const Scene& scene, const std::vector<std::string>& allowed) {
  std::vector<std::string> out;
  for (const auto& c : allowed) {
    if (scene.has_category(c)) out.push_back(c);
  }
  return out;
}

std::string header_hash(const std::filesystem::path& path) {
  const auto text = read_file(path);
  const auto first = text.substr(0, text.find('\n'));
  const auto j = parse_json(first, path.generic_string());
  return j.value("manifest_hash", std::string());
}

}  // namespace

Pipeline::Pipeline(ExperimentManifest manifest)
    : manifest_(std::move(manifest)),
      hash_(manifest_hash(manifest_)),
      priors_(manifest_.priors.empty() ? CooccurrencePriors::defaults() : load_priors(manifest_.priors)) {
  manifest_.validate();
  priors_.validate(CategoryVocab::standard());
}

std::vector<std::string> Pipeline::scene_ids() const {
  std::vector<std::string> ids;
  for (int i = 0; i < manifest_.scene_count; ++i) {
    ids.push_back("scene-" + std::to_string(manifest_.seed * 1000 + static_cast<std::uint64_t>(i)));
  }
  return ids;
}

std::vector<Scene> Pipeline::gen_scenes() const {
  std::vector<Scene> scenes;
  for (int i = 0; i < manifest_.scene_count; ++i) {
    const std::uint64_t seed = manifest_.seed * 1000 + static_cast<std::uint64_t>(i);
    scenes.push_back(generate_scene(seed, manifest_.scene_width, manifest_.scene_height, manifest_.room_count,
                                    CategoryVocab::standard(), priors_));
    save_scene(scenes.back(), manifest_.resolve(manifest_.paths.scenes_dir) / (scenes.back().id + ".json"));
  }
  return scenes;
}

std::vector<Scene> Pipeline::load_scenes() const {
  std::vector<Scene> scenes;
  for (const auto& id : scene_ids()) scenes.push_back(load_scene(manifest_.resolve(manifest_.paths.scenes_dir) / (id + ".json")));
  return scenes;
}

SplitConfig Pipeline::split_for(SplitMode mode) const {
  return make_splits(scene_ids(), CategoryVocab::standard(), mode, manifest_.seed);
}

std::vector<Episode> Pipeline::gen_episodes() const {
  const auto scenes = load_scenes();
  const auto split = split_for(manifest_.split_mode);
  write_file(manifest_.resolve(manifest_.paths.split), format_split(split, hash_));
  std::vector<Episode> episodes;
  for (const auto& scene : scenes) {
    if (std::find(split.train_scenes.begin(), split.train_scenes.end(), scene.id) == split.train_scenes.end()) continue;
    const auto cats = present_categories(scene, split.seen_categories);
    if (cats.empty()) continue;
    auto eps = sample_episodes(scene, cats, manifest_.episodes_per_scene,
                               mix_seed(manifest_.seed ^ kEpisodeSalt, episodes.size()), sim_config());
    episodes.insert(episodes.end(), eps.begin(), eps.end());
  }
  if (episodes.empty()) throw UnsatisfiableEpisodeError("gen-episodes: no training episode could be sampled");
  save_episodes(episodes, manifest_.resolve(manifest_.paths.episodes), hash_);
  return episodes;
}

std::vector<Trajectory> Pipeline::demo(FilterReport* report) const {
  const auto scenes = load_scenes();
  const auto episodes = load_episodes(manifest_.resolve(manifest_.paths.episodes));
  std::vector<Trajectory> demos;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto it = std::find_if(scenes.begin(), scenes.end(), [&](const Scene& s) { return s.id == episodes[i].scene_id; });
    if (it == scenes.end()) throw ValidationError("demo: unknown scene " + episodes[i].scene_id);
    demos.push_back(scripted_demo(*it, episodes[i], mix_seed(manifest_.seed ^ kDemoSalt, i), sim_config()));
  }
  auto kept = filter_demos(demos, report);
  save_trajectories(kept, manifest_.resolve(manifest_.paths.demos), hash_);
  return kept;
}

std::vector<QARecord> Pipeline::annotate(const AnnotatorBackend& backend) const {
  auto demos = load_trajectories(manifest_.resolve(manifest_.paths.demos));
  const auto human = manifest_.resolve(manifest_.paths.human_demos);
  if (std::filesystem::exists(human)) {
    auto extra = filter_demos(load_trajectories(human));
    demos.insert(demos.end(), extra.begin(), extra.end());
  }
  std::vector<QARecord> records;
  for (const auto& t : demos) {
    auto r = annotate_trajectory(t, backend, priors_, manifest_.annotator);
    records.insert(records.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  }
  save_qa_dataset(records, manifest_.resolve(manifest_.paths.qa), hash_);
  return records;
}

TrainResult Pipeline::train() const {
  const auto records = load_qa_dataset(manifest_.resolve(manifest_.paths.qa));
  const FeatureSpec spec{manifest_.features};
  auto result = cotnav::train(featurize_all(records, CategoryVocab::standard(), spec), manifest_.train);
  save_model(PolicyModel{result.params, spec, manifest_.train, CategoryVocab::standard().hash()},
             manifest_.resolve(manifest_.paths.model), hash_);
  write_file(manifest_.resolve(manifest_.paths.training_log), format_training_log(result.log, hash_));
  return result;
}

EvalReport Pipeline::eval(std::optional<SplitMode> mode, bool random_policy) const {
  const auto scenes = load_scenes();
  const auto split = split_for(mode.value_or(manifest_.split_mode));
  PolicyUnderTest policy;
  if (random_policy) {
    policy.random_seed = mix_seed(manifest_.seed, kRandomPolicySalt);
    policy.label = "random";
  } else {
    policy.model = load_model(manifest_.resolve(manifest_.paths.model));
    policy.label = std::string(to_string(policy.model->spec.set)) + "+" + std::string(to_string(policy.model->config.loss));
  }
  EvalConfig config;
  config.sim = sim_config();
  config.annotator = manifest_.annotator;
  auto report = evaluate_split(policy, split, scenes, manifest_.eval_episodes_per_scene,
                               mix_seed(manifest_.seed, kEvalSalt), priors_, config);
  // The baseline gets its own files so it never clobbers the trained policy's report.
  auto target = [&](const std::filesystem::path& p) {
    auto out = manifest_.resolve(p);
    if (random_policy) out.replace_filename(out.stem().string() + "_random" + out.extension().string());
    return out;
  };
  write_file(target(manifest_.paths.eval_results), format_eval_results(report, scenes, hash_, config.sim));
  write_file(target(manifest_.paths.eval_summary),
             format_eval_summary(report, policy.label, to_string(split.mode), hash_));
  return report;
}

std::vector<AblationRow> Pipeline::ablate() const {
  const auto records = load_qa_dataset(manifest_.resolve(manifest_.paths.qa));
  const auto scenes = load_scenes();
  AblationConfig config;
  config.train = manifest_.train;
  config.episodes_per_scene = manifest_.eval_episodes_per_scene;
  config.eval_seed = mix_seed(manifest_.seed, kEvalSalt);
  config.eval.sim = sim_config();
  config.eval.annotator = manifest_.annotator;
  auto rows = run_ablation(records, split_for(manifest_.split_mode), scenes, priors_, config);
  write_file(manifest_.resolve(manifest_.paths.ablation_text), format_ablation_text(rows));
  write_file(manifest_.resolve(manifest_.paths.ablation_rows), format_ablation_rows(rows, hash_));
  return rows;
}

std::vector<Pipeline::Check> Pipeline::validate() const {
  std::vector<Check> checks;
  auto run = [&](const std::string& name, const std::filesystem::path& path, auto&& body) {
    if (!std::filesystem::exists(path)) return;
    Check c{name, true, "ok"};
    try {
      body(path);
    } catch (const std::exception& e) {
      c.ok = false;
      c.message = e.what();
    }
    checks.push_back(std::move(c));
  };
  auto same_hash = [&](const std::filesystem::path& path) {
    const auto h = header_hash(path);
    if (h != hash_) throw ValidationError("produced by a different manifest (" + h.substr(0, 12) + ")");
  };

  std::vector<Scene> scenes;
  for (const auto& id : scene_ids()) {
    run("scene " + id, manifest_.resolve(manifest_.paths.scenes_dir) / (id + ".json"),
        [&](const auto& p) { scenes.push_back(load_scene(p)); });
  }
  auto replay_all = [&](const std::filesystem::path& p) {
    for (const auto& t : load_trajectories(p)) {
      const auto it = std::find_if(scenes.begin(), scenes.end(), [&](const Scene& s) { return s.id == t.episode.scene_id; });
      if (it == scenes.end()) throw ValidationError("trajectory " + t.episode.episode_id + " names an unknown scene");
      t.validate();
      if (!replay_matches(*it, t, sim_config())) {
        throw ValidationError("trajectory " + t.episode.episode_id + " does not replay");
      }
    }
  };
  run("split", manifest_.resolve(manifest_.paths.split), [&](const auto& p) {
    const auto split = load_split(p);
    split.validate();
    if (split != split_for(split.mode)) throw ValidationError("split differs from the manifest's seed");
  });
  run("episodes", manifest_.resolve(manifest_.paths.episodes), [&](const auto& p) {
    same_hash(p);
    load_episodes(p);
  });
  run("demos", manifest_.resolve(manifest_.paths.demos), [&](const auto& p) {
    same_hash(p);
    replay_all(p);
  });
  run("human demos", manifest_.resolve(manifest_.paths.human_demos), replay_all);
  run("qa", manifest_.resolve(manifest_.paths.qa), [&](const auto& p) {
    same_hash(p);
    load_qa_dataset(p);
  });
  run("model", manifest_.resolve(manifest_.paths.model), [&](const auto& p) {
    load_model(p);
    const auto j = parse_json(read_file(p), "model");
    if (j.value("manifest_hash", std::string()) != hash_) throw ValidationError("produced by a different manifest");
  });
  run("training log", manifest_.resolve(manifest_.paths.training_log), [&](const auto& p) {
    same_hash(p);
    parse_training_log(read_file(p));
  });
  run("eval results", manifest_.resolve(manifest_.paths.eval_results), [&](const auto& p) {
    same_hash(p);
    load_jsonl(p, "eval_results");
  });
  return checks;
}

}  // namespace cotnav
