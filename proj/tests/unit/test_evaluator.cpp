#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "cotnav/annotator.hpp"
#include "cotnav/demonstrator.hpp"
#include "cotnav/episodes.hpp"
#include "cotnav/errors.hpp"
#include "cotnav/evaluator.hpp"
#include "cotnav/random.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cotnav;

namespace {

EpisodeResult result(bool success, double l, double p, double start = 0.0, double final_d = 0.0) {
  EpisodeResult r;
  r.success = success;
  r.status = success ? EpisodeStatus::success : EpisodeStatus::failure_stop;
  r.l_m = l;
  r.p_m = p;
  r.start_distance_m = start;
  r.final_distance_m = final_d;
  return r;
}

// Straightforward mean of the per-episode terms, for comparison.
Metrics oracle_metrics(const std::vector<EpisodeResult>& rs) {
  double s = 0.0, spl = 0.0, soft = 0.0;
  for (const auto& r : rs) {
    s += r.success ? 1.0 : 0.0;
    spl += (r.success ? 1.0 : 0.0) * r.l_m / std::max(r.l_m, r.p_m);
    const double progress = r.start_distance_m > 0.0 ? std::max(0.0, 1.0 - r.final_distance_m / r.start_distance_m) : 0.0;
    soft += progress * r.l_m / std::max(r.l_m, r.p_m);
  }
  const double n = static_cast<double>(rs.size());
  return {rs.size(), s / n, spl / n, soft / n};
}

std::vector<Scene> small_scenes(int count, std::uint64_t base) {
  std::vector<Scene> out;
  for (int i = 0; i < count; ++i) {
    auto s = generate_scene(base + static_cast<std::uint64_t>(i), 14, 14, 3);
    s.id = "scene-" + std::to_string(base + static_cast<std::uint64_t>(i));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> ids_of(const std::vector<Scene>& scenes) {
  std::vector<std::string> ids;
  for (const auto& s : scenes) ids.push_back(s.id);
  return ids;
}

}  // namespace

TEST_SUITE("evaluator") {
  TEST_CASE("metric values") {
    const auto m = compute_metrics({result(true, 5.0, 10.0)});
    CHECK(m.sr == 1.0);
    CHECK(m.spl == doctest::Approx(0.5).epsilon(1e-12));

    const auto optimal = compute_metrics({result(true, 3.0, 3.0), result(true, 7.5, 7.5)});
    CHECK(optimal.sr == 1.0);
    CHECK(optimal.spl == 1.0);

    const auto fails = compute_metrics({result(false, 3.0, 1.0, 3.0, 3.0), result(false, 2.0, 9.0, 2.0, 4.0)});
    CHECK(fails.sr == 0.0);
    CHECK(fails.spl == 0.0);
    CHECK(fails.soft_spl == 0.0);

    // Halfway there on an optimal-length prefix.
    CHECK(soft_spl_term(result(false, 4.0, 2.0, 4.0, 2.0)) == doctest::Approx(0.5));
    CHECK_THROWS_AS(compute_metrics({}), ValidationError);
  }

  TEST_CASE("metrics agree with a direct mean, are order-free and bounded") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<EpisodeResult> rs;
      const int n = 1 + static_cast<int>(rng.index(40));
      for (int i = 0; i < n; ++i) {
        const double l = 0.25 * (1 + static_cast<int>(rng.index(40)));
        const double p = 0.25 * static_cast<int>(rng.index(80));
        const double start = l;
        const double final_d = 0.25 * static_cast<int>(rng.index(60));
        rs.push_back(result(rng.bernoulli(0.5), l, p, start, final_d));
      }
      const auto m = compute_metrics(rs);
      const auto o = oracle_metrics(rs);
      CHECK(m.sr == doctest::Approx(o.sr).epsilon(1e-12));
      CHECK(m.spl == doctest::Approx(o.spl).epsilon(1e-12));
      CHECK(m.soft_spl == doctest::Approx(o.soft_spl).epsilon(1e-12));
      CHECK(m.spl <= m.sr + 1e-12);
      CHECK(m.spl >= 0.0);

      auto shuffled = rs;
      rng.shuffle(std::span(shuffled));
      CHECK(compute_metrics(shuffled) == m);
    }
  }

  TEST_CASE("always stop ends after one step") {
    const auto scene = testing::scene_from_ascii({"#######", "#.....#", "#.....#", "#....c#", "#######"},
                                                 {{'c', "chair"}});
    const auto ep = testing::episode_at(scene, {1, 1}, 3, "chair", 3.0);
    const auto r = run_episode_with(scene, ep, [](const Observation&, const QARecord&) { return Action::stop; },
                                    CooccurrencePriors::defaults());
    CHECK(r.steps == 1);
    CHECK(r.status == EpisodeStatus::failure_stop);
    CHECK_FALSE(r.success);
    CHECK(r.p_m == 0.0);
    CHECK(r.visited.size() == 2);
  }

  TEST_CASE("replaying a demo reproduces its path length") {
    const auto scenes = small_scenes(3, 40);
    for (const auto& scene : scenes) {
      for (const auto& ep : sample_episodes(scene, scene.categories_present(), 3, 11)) {
        const auto demo = scripted_demo(scene, ep, 1);
        const auto actions = demo.actions();
        std::size_t i = 0;
        const auto r = run_episode_with(
            scene, ep, [&](const Observation&, const QARecord&) { return actions.at(i++); },
            CooccurrencePriors::defaults());
        CHECK(r.status == demo.outcome);
        CHECK(r.p_m == doctest::Approx(demo.path_length_m).epsilon(1e-12));
        CHECK(r.steps == static_cast<int>(actions.size()));
        const auto oracle_l = testing::oracle_geodesic(scene, ep.start_pose.position, ep.target_category, 1);
        REQUIRE(oracle_l.has_value());
        CHECK(r.l_m == doctest::Approx(*oracle_l));
        CHECK(r.start_distance_m == doctest::Approx(*oracle_l));
        if (r.success) CHECK(r.final_distance_m == 0.0);
      }
    }
  }

  TEST_CASE("shortest route has the geodesic length") {
    const auto scene = small_scenes(1, 77).front();
    for (const auto& ep : sample_episodes(scene, scene.categories_present(), 10, 5)) {
      const auto route = shortest_route(scene, ep.start_pose.position, ep.target_category);
      REQUIRE_FALSE(route.empty());
      CHECK(route.front() == ep.start_pose.position);
      CHECK((route.size() - 1) * scene.cell_size_m == doctest::Approx(ep.geodesic_l_m));
      for (std::size_t k = 1; k < route.size(); ++k) {
        CHECK(std::abs(route[k].x - route[k - 1].x) + std::abs(route[k].y - route[k - 1].y) == 1);
      }
    }
  }

  TEST_CASE("random policy always terminates") {
    const auto scenes = small_scenes(2, 90);
    int done = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      for (const auto& scene : scenes) {
        const auto ep = sample_episodes(scene, scene.categories_present(), 1, seed).front();
        const auto r = run_random_episode(scene, ep, seed, CooccurrencePriors::defaults());
        CHECK(r.status != EpisodeStatus::running);
        CHECK(r.steps >= 1);
        CHECK(r.steps <= kMaxEpisodeSteps);
        CHECK(r.p_m >= 0.0);
        ++done;
      }
    }
    CHECK(done == 100);
  }

  TEST_CASE("evaluation episodes stay inside the test split") {
    const auto scenes = small_scenes(10, 200);
    for (auto mode : {SplitMode::object_gen, SplitMode::scene_gen}) {
      const auto split = make_splits(ids_of(scenes), CategoryVocab::standard(), mode, 4);
      std::vector<Episode> eps;
      try {
        eps = split_episodes(split, scenes, 5, 12);
      } catch (const UnsatisfiableEpisodeError&) {
        // Tiny scenes may lack every held-out category; that is the documented failure.
        CHECK(mode == SplitMode::object_gen);
        continue;
      }
      REQUIRE_FALSE(eps.empty());
      const std::set<std::string> test(split.test_scenes.begin(), split.test_scenes.end());
      const auto& cats = split.eval_categories();
      for (const auto& e : eps) {
        CHECK(test.count(e.scene_id) == 1);
        CHECK(std::find(cats.begin(), cats.end(), e.target_category) != cats.end());
      }
      CHECK(split_episodes(split, scenes, 5, 12) == eps);
    }
  }

  TEST_CASE("parallel evaluation is deterministic") {
    const auto scenes = small_scenes(4, 300);
    std::vector<Episode> eps;
    for (const auto& s : scenes) {
      const auto more = sample_episodes(s, s.categories_present(), 4, 3);
      eps.insert(eps.end(), more.begin(), more.end());
    }
    PolicyUnderTest random;
    random.random_seed = 5;
    random.label = "random";
    const auto one = evaluate_episodes(random, eps, scenes, CooccurrencePriors::defaults(), {}, 1);
    const auto many = evaluate_episodes(random, eps, scenes, CooccurrencePriors::defaults(), {}, 4);
    CHECK(one.results == many.results);
    CHECK(one.metrics == many.metrics);
    CHECK(format_eval_summary(one, "random", "scene_gen") == format_eval_summary(many, "random", "scene_gen"));
  }

  TEST_CASE("ablation ladder runs end to end on a small set") {
    const auto scenes = small_scenes(6, 500);
    const auto split = make_splits(ids_of(scenes), CategoryVocab::standard(), SplitMode::scene_gen, 2);
    std::vector<QARecord> dataset;
    for (const auto& s : scenes) {
      if (std::find(split.train_scenes.begin(), split.train_scenes.end(), s.id) == split.train_scenes.end()) continue;
      for (const auto& ep : sample_episodes(s, s.categories_present(), 3, 8)) {
        const auto recs = annotate_trajectory(scripted_demo(s, ep, 0), RuleBackend{}, CooccurrencePriors::defaults(), {});
        dataset.insert(dataset.end(), recs.begin(), recs.end());
      }
    }
    AblationConfig config;
    config.train.epochs = 3;
    config.episodes_per_scene = 3;
    const auto rows = run_ablation(dataset, split, scenes, CooccurrencePriors::defaults(), config);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].variant.label == "Pure Text");
    CHECK(rows[3].variant.loss == LossMode::adaptive);
    for (const auto& r : rows) {
      CHECK(r.metrics.n > 0);
      CHECK(r.metrics.spl <= r.metrics.sr + 1e-12);
    }
    CHECK(format_ablation_text(rows).find("H-CoT + Closed-Loop") != std::string::npos);
  }
}
