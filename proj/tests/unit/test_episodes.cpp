#include <doctest.h>

#include <algorithm>
#include <set>

#include "cotnav/demonstrator.hpp"
#include "cotnav/episodes.hpp"
#include "cotnav/errors.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cotnav;
using cotnav::testing::episode_at;
using cotnav::testing::oracle_geodesic;
using cotnav::testing::scene_from_ascii;

TEST_SUITE("episodes") {
  TEST_CASE("geodesic distance on an open 3x3 grid") {
    const auto scene = scene_from_ascii({"...", "...", "..b"}, {{'b', "bed"}});
    CHECK(geodesic_distance(scene, {0, 0}, "bed") == doctest::Approx(0.75));
    CHECK(geodesic_distance(scene, {2, 1}, "bed") == 0.0);
    CHECK_THROWS_AS(geodesic_distance(scene, {0, 0}, "sofa"), UnsatisfiableEpisodeError);
  }

  TEST_CASE("sealed targets are unreachable") {
    const auto scene = scene_from_ascii({".....", "..###", "..#b#", "..###"}, {{'b', "bed"}});
    CHECK_THROWS_AS(geodesic_distance(scene, {0, 0}, "bed"), UnreachableError);
  }

  TEST_CASE("BFS geodesic matches an exhaustive Dijkstra on random scenes") {
    for (std::uint64_t seed = 100; seed < 150; ++seed) {
      const Scene scene = generate_scene(seed, 16, 16, 2 + static_cast<int>(seed % 4));
      const auto cats = scene.categories_present();
      const auto floor = scene.floor_cells();
      for (std::size_t k = 0; k < floor.size(); k += 7) {
        const auto& cat = cats[k % cats.size()];
        const auto expected = oracle_geodesic(scene, floor[k], cat, 1);
        REQUIRE(expected.has_value());
        CHECK(geodesic_distance(scene, floor[k], cat) == *expected);
      }
    }
  }

  TEST_CASE("sampled episodes are valid and reproducible") {
    const auto scene = scene_from_ascii({"########", "#......#", "#......#", "#.....b#", "########"}, {{'b', "bed"}});
    const auto eps = sample_episodes(scene, {"bed"}, 5, 3);
    REQUIRE(eps.size() == 5);
    for (const auto& e : eps) {
      CHECK(e.geodesic_l_m > 0.0);
      CHECK(e.geodesic_l_m == *oracle_geodesic(scene, e.start_pose.position, "bed", 1));
      CHECK(scene.is_floor(e.start_pose.position));
    }
    CHECK(eps == sample_episodes(scene, {"bed"}, 5, 3));
    CHECK_THROWS_AS(sample_episodes(scene, {"piano"}, 5, 3), UnsatisfiableEpisodeError);
  }

  TEST_CASE("object generalization split holds out the five categories and scenes") {
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) ids.push_back("scene-" + std::to_string(i));
    const auto split = make_splits(ids, CategoryVocab::standard(), SplitMode::object_gen, 4);
    const std::set<std::string> unseen(split.unseen_categories.begin(), split.unseen_categories.end());
    CHECK(unseen == std::set<std::string>{"counter", "bed", "toilet", "chest_of_drawers", "plant"});
    CHECK(split.seen_categories.size() + split.unseen_categories.size() == 21);
    for (const auto& s : split.test_scenes) {
      CHECK(std::find(split.train_scenes.begin(), split.train_scenes.end(), s) == split.train_scenes.end());
    }
  }

  TEST_CASE("scene generalization split is 8/2 and disjoint") {
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) ids.push_back("scene-" + std::to_string(i));
    const auto split = make_splits(ids, CategoryVocab::standard(), SplitMode::scene_gen, 1);
    CHECK(split.train_scenes.size() == 8);
    CHECK(split.test_scenes.size() == 2);
    std::set<std::string> all(split.train_scenes.begin(), split.train_scenes.end());
    all.insert(split.test_scenes.begin(), split.test_scenes.end());
    CHECK(all.size() == 10);
    CHECK(split.seen_categories.size() == 21);
    CHECK_THROWS_AS(make_splits({"only"}, CategoryVocab::standard(), SplitMode::scene_gen, 1), ValidationError);
    CHECK(parse_split(format_split(split)) == split);
  }

  TEST_CASE("episode files round-trip and carry a header") {
    const Scene scene = generate_scene(2, 16, 16, 3);
    const auto eps = sample_episodes(scene, scene.categories_present(), 8, 9);
    const auto text = format_episodes(eps, "abc");
    CHECK(text.find("\"manifest_hash\":\"abc\"") != std::string::npos);
    CHECK(parse_episodes(text) == eps);
    CHECK_THROWS_AS(parse_episodes(text.substr(0, text.size() - 20)), ParseError);
  }
}

TEST_SUITE("demonstrator") {
  TEST_CASE("single room: the searcher finds a target after one sweep") {
    const auto scene = scene_from_ascii({"########", "#......#", "#......#", "#......#", "#......#", "#..b...#",
                                         "#......#", "########"},
                                        {{'b', "bed"}});
    const auto ep = episode_at(scene, {5, 2}, 0, "bed", geodesic_distance(scene, {5, 2}, "bed"));
    const auto t = scripted_demo(scene, ep, 1);
    CHECK(t.outcome == EpisodeStatus::success);
    CHECK(t.steps.size() <= 30);
    CHECK(t == scripted_demo(scene, ep, 1));
  }

  TEST_CASE("sealed target times out") {
    const auto scene = scene_from_ascii({"#######", "#.....#", "#.....#", "#..####", "#..#b.#", "#######"},
                                        {{'b', "bed"}});
    const Episode ep = episode_at(scene, {1, 1}, 0, "bed", 1.0);
    const auto t = scripted_demo(scene, ep, 1);
    CHECK(t.outcome == EpisodeStatus::failure_timeout);
    CHECK(t.steps.size() == 500);
  }

  TEST_CASE("demos replay exactly, respect p >= l, and round-trip through files") {
    std::vector<Trajectory> all;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Scene scene = generate_scene(seed, 16, 16, 3);
      for (const auto& ep : sample_episodes(scene, scene.categories_present(), 3, seed)) {
        auto t = scripted_demo(scene, ep, seed);
        CHECK_NOTHROW(t.validate());
        CHECK(replay(scene, ep, t.actions()) == t);
        CHECK(replay_matches(scene, t));
        if (t.outcome == EpisodeStatus::success) CHECK(t.path_length_m >= ep.geodesic_l_m);
        const bool ends_with_stop = t.steps.back().action == Action::stop;
        CHECK(ends_with_stop == (t.outcome != EpisodeStatus::failure_timeout));
        all.push_back(std::move(t));
      }
    }
    CHECK(parse_trajectories(format_trajectories(all)) == all);
  }

  TEST_CASE("replay rejects bad action lists") {
    const Scene scene = generate_scene(4, 16, 16, 3);
    const auto ep = sample_episodes(scene, scene.categories_present(), 1, 4).front();
    CHECK_THROWS_AS(replay(scene, ep, {}), ValidationError);
    CHECK_THROWS_AS(replay(scene, ep, {Action::stop, Action::turn_left}), IllegalTransitionError);
  }

  TEST_CASE("filtering keeps exactly the successes") {
    const Scene scene = generate_scene(8, 16, 16, 3);
    const auto eps = sample_episodes(scene, scene.categories_present(), 100, 8);
    std::vector<Trajectory> mixed;
    std::size_t successes = 0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
      // Every third episode is cut short by an immediate stop.
      auto t = i % 3 == 0 ? replay(scene, eps[i], {Action::stop}) : scripted_demo(scene, eps[i], i);
      successes += t.outcome == EpisodeStatus::success ? 1 : 0;
      mixed.push_back(std::move(t));
    }
    FilterReport report;
    const auto kept = filter_demos(mixed, &report);
    CHECK(kept.size() == successes);
    CHECK(report.kept == successes);
    CHECK(report.kept + report.removed_failure_stop + report.removed_timeout + report.removed_too_long +
              report.removed_other ==
          mixed.size());

    std::vector<Trajectory> failures;
    for (const auto& t : mixed) {
      if (t.outcome != EpisodeStatus::success) failures.push_back(t);
    }
    CHECK(filter_demos(failures).empty());
  }

  TEST_CASE("map memory only grows and never contradicts the scene") {
    const Scene scene = generate_scene(12, 16, 16, 4);
    const auto ep = sample_episodes(scene, scene.categories_present(), 1, 12).front();
    const auto t = scripted_demo(scene, ep, 0);
    MapMemory memory(scene.size());
    std::size_t previous = 0;
    for (const auto& s : t.steps) {
      memory.integrate(s.observation);
      CHECK(memory.explored_count() >= previous);
      previous = memory.explored_count();
      for (const auto& c : scene.floor_cells()) {
        if (memory.explored(c)) CHECK(memory.known_floor(c));
      }
    }
  }
}
