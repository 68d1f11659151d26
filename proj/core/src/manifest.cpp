#include "cotnav/manifest.hpp"

#include "cotnav/errors.hpp"
#include "cotnav/hash.hpp"

namespace cotnav {

void ExperimentManifest::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError("manifest: " + msg); };
  if (scene_count < 2) fail("scene_count must be at least 2");
  if (scene_width < 7 || scene_height < 7) fail("scene dimensions must be at least 7");
  if (room_count < 1) fail("room_count must be positive");
  if (episodes_per_scene < 1) fail("episodes_per_scene must be positive");
  if (eval_episodes_per_scene < 1) fail("eval_episodes_per_scene must be positive");
  if (success_radius_cells < 0) fail("success_radius_cells must be non-negative");
  if (!(annotator.noise >= 0.0 && annotator.noise <= 1.0)) fail("annotator noise must lie in [0, 1]");
  if (annotator_backend != "rule" && annotator_backend != "chat") fail("annotator backend must be rule or chat");
  try {
    train.validate();
  } catch (const ValidationError& e) {
    fail(e.what());
  }
}

std::filesystem::path ExperimentManifest::resolve(const std::filesystem::path& artifact) const {
  return artifact.is_absolute() ? artifact : out_dir / artifact;
}

OrderedJson manifest_to_json(const ExperimentManifest& m) {
  OrderedJson j;
  j["kind"] = "manifest";
  j["format_version"] = kManifestFormatVersion;
  j["tool_version"] = m.tool_version;
  j["seed"] = m.seed;
  j["out_dir"] = m.out_dir.generic_string();
  j["priors"] = m.priors.generic_string();
  j["paths"] = {
      {"scenes_dir", m.paths.scenes_dir.generic_string()},
      {"split", m.paths.split.generic_string()},
      {"episodes", m.paths.episodes.generic_string()},
      {"demos", m.paths.demos.generic_string()},
      {"human_demos", m.paths.human_demos.generic_string()},
      {"qa", m.paths.qa.generic_string()},
      {"model", m.paths.model.generic_string()},
      {"training_log", m.paths.training_log.generic_string()},
      {"eval_results", m.paths.eval_results.generic_string()},
      {"eval_summary", m.paths.eval_summary.generic_string()},
      {"ablation_text", m.paths.ablation_text.generic_string()},
      {"ablation_rows", m.paths.ablation_rows.generic_string()},
  };
  j["scenes"] = {{"count", m.scene_count}, {"width", m.scene_width}, {"height", m.scene_height},
                 {"room_count", m.room_count}};
  j["episodes"] = {{"per_scene", m.episodes_per_scene}, {"split", to_string(m.split_mode)}};
  j["annotator"] = {{"backend", m.annotator_backend},
                    {"noise", m.annotator.noise},
                    {"plausibility_threshold", m.annotator.plausibility_threshold},
                    {"relevance_gate", m.annotator.relevance_gate},
                    {"detection_weight", m.annotator.detection_weight},
                    {"alignment_weight", m.annotator.alignment_weight},
                    {"max_in_flight", m.annotator.max_in_flight}};
  j["train"] = {{"features", to_string(m.features)},
                {"loss", to_string(m.train.loss)},
                {"alpha", m.train.alpha},
                {"beta", m.train.beta},
                {"learning_rate", m.train.learning_rate},
                {"momentum", m.train.momentum},
                {"batch_size", m.train.batch_size},
                {"epochs", m.train.epochs}};
  j["eval"] = {{"episodes_per_scene", m.eval_episodes_per_scene}, {"success_radius_cells", m.success_radius_cells}};
  return j;
}

ExperimentManifest manifest_from_json(const Json& j, const std::filesystem::path& base_dir) {
  ExperimentManifest m;
  try {
    if (j.value("kind", std::string("manifest")) != "manifest") throw ParseError("manifest: wrong kind");
    if (j.value("format_version", kManifestFormatVersion) != kManifestFormatVersion) {
      throw ParseError("manifest: unsupported format_version");
    }
    m.tool_version = j.value("tool_version", m.tool_version);
    m.seed = j.value("seed", m.seed);
    m.out_dir = j.value("out_dir", m.out_dir.generic_string());
    m.priors = j.value("priors", std::string());
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      auto path_of = [&](const char* key, std::filesystem::path& field) {
        field = p.value(key, field.generic_string());
      };
      path_of("scenes_dir", m.paths.scenes_dir);
      path_of("split", m.paths.split);
      path_of("episodes", m.paths.episodes);
      path_of("demos", m.paths.demos);
      path_of("human_demos", m.paths.human_demos);
      path_of("qa", m.paths.qa);
      path_of("model", m.paths.model);
      path_of("training_log", m.paths.training_log);
      path_of("eval_results", m.paths.eval_results);
      path_of("eval_summary", m.paths.eval_summary);
      path_of("ablation_text", m.paths.ablation_text);
      path_of("ablation_rows", m.paths.ablation_rows);
    }
    if (j.contains("scenes")) {
      const auto& s = j.at("scenes");
      m.scene_count = s.value("count", m.scene_count);
      m.scene_width = s.value("width", m.scene_width);
      m.scene_height = s.value("height", m.scene_height);
      m.room_count = s.value("room_count", m.room_count);
    }
    if (j.contains("episodes")) {
      const auto& e = j.at("episodes");
      m.episodes_per_scene = e.value("per_scene", m.episodes_per_scene);
      m.split_mode = parse_split_mode(e.value("split", std::string(to_string(m.split_mode))));
    }
    if (j.contains("annotator")) {
      const auto& a = j.at("annotator");
      m.annotator_backend = a.value("backend", m.annotator_backend);
      m.annotator.noise = a.value("noise", m.annotator.noise);
      m.annotator.plausibility_threshold = a.value("plausibility_threshold", m.annotator.plausibility_threshold);
      m.annotator.relevance_gate = a.value("relevance_gate", m.annotator.relevance_gate);
      m.annotator.detection_weight = a.value("detection_weight", m.annotator.detection_weight);
      m.annotator.alignment_weight = a.value("alignment_weight", m.annotator.alignment_weight);
      m.annotator.max_in_flight = a.value("max_in_flight", m.annotator.max_in_flight);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      auto features = parse_feature_set(t.value("features", std::string(to_string(m.features))));
      if (!features) throw ParseError("manifest: unknown feature set");
      m.features = *features;
      auto loss = parse_loss_mode(t.value("loss", std::string(to_string(m.train.loss))));
      if (!loss) throw ParseError("manifest: unknown loss mode");
      m.train.loss = *loss;
      m.train.alpha = t.value("alpha", m.train.alpha);
      m.train.beta = t.value("beta", m.train.beta);
      m.train.learning_rate = t.value("learning_rate", m.train.learning_rate);
      m.train.momentum = t.value("momentum", m.train.momentum);
      m.train.batch_size = t.value("batch_size", m.train.batch_size);
      m.train.epochs = t.value("epochs", m.train.epochs);
    }
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      m.eval_episodes_per_scene = e.value("episodes_per_scene", m.eval_episodes_per_scene);
      m.success_radius_cells = e.value("success_radius_cells", m.success_radius_cells);
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
  if (m.out_dir.is_relative() && !base_dir.empty()) m.out_dir = base_dir / m.out_dir;
  if (!m.priors.empty() && m.priors.is_relative() && !base_dir.empty()) m.priors = base_dir / m.priors;
  m.train.seed = m.seed;
  m.annotator.seed = m.seed;
  m.annotator.success_radius_cells = m.success_radius_cells;
  m.validate();
  return m;
}

std::string manifest_hash(const ExperimentManifest& manifest) {
  // out_dir is where a run lives, not what it computes; leave it out so a
  // rerun elsewhere carries the same hash.
  auto j = manifest_to_json(manifest);
  j.erase("out_dir");
  return sha256_hex(Json::parse(j.dump()).dump());
}

ExperimentManifest load_manifest(const std::filesystem::path& path) {
  const auto j = parse_json(read_file(path), "manifest");
  return manifest_from_json(j, path.parent_path());
}

void save_manifest(const ExperimentManifest& manifest, const std::filesystem::path& path) {
  // Relative paths are read back against the manifest's own directory, so
  // rebase them onto it before writing.
  namespace fs = std::filesystem;
  const auto base = fs::absolute(path.parent_path()).lexically_normal();
  auto rebase = [&](const fs::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    const auto rel = fs::absolute(p).lexically_normal().lexically_relative(base);
    return rel.empty() ? fs::absolute(p).lexically_normal() : rel;
  };
  auto m = manifest;
  m.out_dir = rebase(m.out_dir);
  m.priors = rebase(m.priors);
  write_file(path, manifest_to_json(m).dump(2) + "\n");
}

}  // namespace cotnav
