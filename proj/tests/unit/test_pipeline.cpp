#include <doctest.h>

#include <filesystem>

#include "cotnav/errors.hpp"
#include "cotnav/io.hpp"
#include "cotnav/manifest.hpp"
#include "cotnav/pipeline.hpp"

using namespace cotnav;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("cotnav-pipeline-" + std::to_string(::getpid())) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

ExperimentManifest tiny(const std::filesystem::path& out) {
  ExperimentManifest m;
  m.seed = 7;
  m.out_dir = out;
  m.scene_count = 5;
  m.scene_width = 12;
  m.scene_height = 12;
  m.room_count = 3;
  m.episodes_per_scene = 3;
  m.eval_episodes_per_scene = 3;
  m.train.epochs = 3;
  return m;
}

void run_all(const Pipeline& p) {
  p.gen_scenes();
  p.gen_episodes();
  p.demo();
  p.annotate(RuleBackend{});
  p.train();
  p.eval();
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("manifest round-trip and hash") {
    auto m = tiny("a");
    m.annotator.noise = 0.25;
    m.train.loss = LossMode::adaptive;
    const auto back = manifest_from_json(Json::parse(manifest_to_json(m).dump()));
    CHECK(manifest_to_json(back).dump() == manifest_to_json(m).dump());
    CHECK(manifest_hash(back) == manifest_hash(m));

    auto moved = m;
    moved.out_dir = "elsewhere";
    CHECK(manifest_hash(moved) == manifest_hash(m));
    auto reseeded = m;
    reseeded.seed = 8;
    CHECK(manifest_hash(reseeded) != manifest_hash(m));

    auto bad = m;
    bad.scene_count = 1;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = m;
    bad.train.alpha = -1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
  }

  TEST_CASE("a manifest saved inside its run directory loads back pointing at it") {
    const auto dir = scratch("saved");
    save_manifest(tiny(dir), dir / "manifest.json");
    const auto loaded = load_manifest(dir / "manifest.json");
    CHECK(std::filesystem::equivalent(loaded.out_dir, dir));
    CHECK(manifest_hash(loaded) == manifest_hash(tiny(dir)));
  }

  TEST_CASE("same manifest gives identical artifacts") {
    const auto a = scratch("a");
    const auto b = scratch("b");
    Pipeline pa(tiny(a));
    Pipeline pb(tiny(b));
    run_all(pa);
    run_all(pb);
    const ArtifactPaths names;
    for (const auto& f : {names.split, names.episodes, names.demos, names.qa, names.model, names.training_log,
                          names.eval_results, names.eval_summary}) {
      CAPTURE(f);
      CHECK(read_file(a / f) == read_file(b / f));
    }
    for (const auto& check : pa.validate()) {
      CAPTURE(check.artifact);
      CAPTURE(check.message);
      CHECK(check.ok);
    }
  }

  TEST_CASE("stages fail loudly on missing inputs") {
    Pipeline p(tiny(scratch("empty")));
    CHECK_THROWS_AS(p.train(), Error);
    CHECK_THROWS_AS(p.demo(), Error);
  }
}
