#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cotnav/annotator.hpp"
#include "cotnav/demonstrator.hpp"
#include "cotnav/evaluator.hpp"
#include "cotnav/manifest.hpp"
#include "cotnav/priors.hpp"
#include "cotnav/scene.hpp"

namespace cotnav {

/// The experiment stages, each reading its inputs from and writing its
/// outputs to the artifact paths named in the manifest.
class Pipeline {
 public:
  explicit Pipeline(ExperimentManifest manifest);

  const ExperimentManifest& manifest() const { return manifest_; }
  const std::string& hash() const { return hash_; }
  const CooccurrencePriors& priors() const { return priors_; }
  SimConfig sim_config() const { return {manifest_.success_radius_cells, kMaxEpisodeSteps}; }

  std::vector<std::string> scene_ids() const;
  std::vector<Scene> gen_scenes() const;
  std::vector<Scene> load_scenes() const;
  SplitConfig split_for(SplitMode mode) const;

  /// Writes the split and the training episodes (train scenes, seen categories).
  std::vector<Episode> gen_episodes() const;
  std::vector<Trajectory> demo(FilterReport* report = nullptr) const;
  /// Annotates scripted demos plus any committed human demos.
  std::vector<QARecord> annotate(const AnnotatorBackend& backend) const;
  TrainResult train() const;
  /// Evaluates the trained model, or the random baseline.
  EvalReport eval(std::optional<SplitMode> mode = std::nullopt, bool random_policy = false) const;
  std::vector<AblationRow> ablate() const;

  struct Check {
    std::string artifact;
    bool ok = true;
    std::string message;
  };
  /// Schema, manifest-hash and replay checks over every artifact present.
  std::vector<Check> validate() const;

 private:
  ExperimentManifest manifest_;
  std::string hash_;
  CooccurrencePriors priors_;
};

}  // namespace cotnav
