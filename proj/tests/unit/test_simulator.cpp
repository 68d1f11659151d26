#include <doctest.h>

#include <cmath>

#include "cotnav/errors.hpp"
#include "cotnav/random.hpp"
#include "cotnav/simulator.hpp"
#include "fixtures.hpp"

using namespace cotnav;
using cotnav::testing::episode_at;
using cotnav::testing::scene_from_ascii;

namespace {

const std::vector<std::string> kOpenRoom = {
    "###########",
    "#.........#",
    "#.........#",
    "#.........#",
    "#.........#",
    "#.........#",
    "#.........#",
    "#.........#",
    "#.........#",
    "###########",
};

// Marches along the centre-to-centre segment in tiny increments and reports
// whether any intermediate cell is a wall.
bool ray_blocked(const Scene& s, Cell a, Cell b) {
  const int steps = 2000;
  for (int i = 1; i < steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const Cell c{static_cast<int>(std::floor(a.x + 0.5 + t * (b.x - a.x))),
                 static_cast<int>(std::floor(a.y + 0.5 + t * (b.y - a.y)))};
    if (c == a || c == b) continue;
    if (s.is_wall(c)) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("action encoding is fixed") {
    CHECK(kNumActions == 6);
    const char* names[] = {"move_forward", "turn_left", "turn_right", "look_up", "look_down", "stop"};
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(to_string(action_at(i)) == names[i]);
      CHECK(ordinal(*parse_action(names[i])) == i);
    }
  }

  TEST_CASE("reset places the agent and rejects wall starts") {
    const auto scene = scene_from_ascii(kOpenRoom, {});
    const auto ep = episode_at(scene, {4, 4}, 0, "chair");
    auto scene_with_chair = scene;
    scene_with_chair.objects.push_back({0, "chair", {2, 2}});
    const auto a = reset(scene_with_chair, ep);
    CHECK(a.status == EpisodeStatus::running);
    CHECK(a.pose == ep.start_pose);
    CHECK(a == reset(scene_with_chair, ep));
    CHECK_THROWS_AS(reset(scene_with_chair, episode_at(scene, {0, 0}, 0, "chair")), InvalidEpisodeError);
  }

  TEST_CASE("rotation arithmetic") {
    auto scene = scene_from_ascii(kOpenRoom, {});
    scene.objects.push_back({0, "chair", {1, 1}});
    const auto start = reset(scene, episode_at(scene, {5, 5}, 0, "chair"));
    const auto left = step(scene, start, Action::turn_left).state;
    CHECK(left.pose.heading == 11);
    CHECK(left.pose.heading_deg() == doctest::Approx(330.0));
    CHECK(left.pose.position == start.pose.position);
    CHECK(step(scene, left, Action::turn_right).state.pose == start.pose);

    auto s = start;
    for (int i = 0; i < 12; ++i) s = step(scene, s, Action::turn_left).state;
    CHECK(s.pose == start.pose);
    CHECK(s.steps_taken == 12);
  }

  TEST_CASE("forward into a wall is a no-op that consumes a step") {
    auto scene = scene_from_ascii(kOpenRoom, {});
    scene.objects.push_back({0, "chair", {8, 8}});
    const auto start = reset(scene, episode_at(scene, {1, 1}, 0, "chair"));
    const auto next = step(scene, start, Action::move_forward).state;
    CHECK(next.pose.position == start.pose.position);
    CHECK(next.steps_taken == 1);
    CHECK(next.path_length_m == 0.0);
    const auto east = step(scene, step(scene, start, Action::turn_right).state, Action::move_forward).state;
    CHECK(east.pose.position == start.pose.position);  // heading 30 still snaps north
  }

  TEST_CASE("visibility predicate") {
    auto scene = scene_from_ascii(kOpenRoom, {});
    const AgentPose pose{{5, 7}, 0, 0};
    CHECK(visible(scene, pose, {5, 4}));    // 3 ahead
    CHECK_FALSE(visible(scene, pose, {8, 7}));  // 90 degrees off
    scene.cells[scene.size().index({5, 6})] = CellKind::wall;
    CHECK(ray_blocked(scene, {5, 7}, {5, 5}));
    CHECK_FALSE(visible(scene, pose, {5, 5}));  // behind the wall
    CHECK(visible(scene, pose, {5, 6}));        // the wall itself is seen
  }

  TEST_CASE("visibility agrees with a ray-march oracle on axis-aligned lines") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      auto scene = scene_from_ascii(kOpenRoom, {});
      for (int k = 0; k < 10; ++k) {
        const Cell c{1 + static_cast<int>(rng.index(9)), 1 + static_cast<int>(rng.index(8))};
        scene.cells[scene.size().index(c)] = CellKind::wall;
      }
      const Cell from{1 + static_cast<int>(rng.index(9)), 8};
      if (scene.is_wall(from)) continue;
      const Cell to{from.x, 1 + static_cast<int>(rng.index(7))};
      if (to == from || scene.is_wall(to)) continue;
      const AgentPose pose{from, 0, 0};
      const double d = from.y - to.y;
      const bool expected = d >= 1.0 && d <= 8.0 && !ray_blocked(scene, from, to);
      CAPTURE(trial);
      CHECK(visible(scene, pose, to) == expected);
    }
  }

  TEST_CASE("stop next to a visible target succeeds, elsewhere it fails") {
    const auto scene = scene_from_ascii({"####", "#c.#", "####"}, {{'c', "chair"}});
    const auto s = reset(scene, episode_at(scene, {2, 1}, 9, "chair"));
    const auto r = step(scene, s, Action::stop);
    CHECK(r.observation.sees("chair"));
    CHECK(r.state.status == EpisodeStatus::success);

    const auto facing_away = reset(scene, episode_at(scene, {2, 1}, 3, "chair"));
    CHECK(step(scene, facing_away, Action::stop).state.status == EpisodeStatus::failure_stop);

    auto big = scene_from_ascii(kOpenRoom, {});
    big.objects.push_back({0, "chair", {1, 1}});
    const auto far = reset(big, episode_at(big, {8, 8}, 0, "chair"));
    const auto stopped = step(big, far, Action::stop).state;
    CHECK(stopped.status == EpisodeStatus::failure_stop);
    CHECK(stopped.steps_taken == 1);
    CHECK_THROWS_AS(step(big, stopped, Action::turn_left), IllegalTransitionError);
  }

  TEST_CASE("episodes time out at 500 steps") {
    auto scene = scene_from_ascii(kOpenRoom, {});
    scene.objects.push_back({0, "chair", {1, 1}});
    auto s = reset(scene, episode_at(scene, {8, 8}, 0, "chair"));
    int n = 0;
    while (!s.terminal()) {
      s = step(scene, s, Action::turn_left).state;
      ++n;
    }
    CHECK(n == 500);
    CHECK(s.status == EpisodeStatus::failure_timeout);
  }

  TEST_CASE("random walks keep path length, step bound and success conjuncts") {
    const Scene scene = generate_scene(21, 16, 16, 3);
    Rng rng(5);
    int successes = 0;
    for (int ep = 0; ep < 60; ++ep) {
      const auto floor = scene.floor_cells();
      const Cell start = floor[rng.index(floor.size())];
      const auto& target = scene.objects[rng.index(scene.objects.size())].category;
      auto s = reset(scene, episode_at(scene, start, static_cast<int>(rng.index(12)), target));
      int moves = 0;
      Observation last;
      while (!s.terminal()) {
        // Bias towards motion so some walks end near objects.
        const Action a = rng.bernoulli(0.02) ? Action::stop : action_at(rng.index(5));
        const auto r = step(scene, s, a);
        if (a == Action::move_forward && r.state.pose.position != s.pose.position) ++moves;
        CHECK(r.state.steps_taken == s.steps_taken + 1);
        s = r.state;
        last = r.observation;
      }
      CHECK(s.steps_taken <= kMaxEpisodeSteps);
      CHECK(s.path_length_m == doctest::Approx(moves * scene.cell_size_m).epsilon(1e-12));
      if (s.status == EpisodeStatus::success) {
        ++successes;
        CHECK(last.sees(target));
        const auto hops = hops_to_nearest(scene, s.pose.position, target);
        REQUIRE(hops.has_value());
        CHECK(*hops <= 1);
      }
    }
    CHECK(successes >= 0);
  }

  TEST_CASE("observations only list objects that pass the predicate") {
    const Scene scene = generate_scene(9, 16, 16, 4);
    for (const auto& cell : scene.floor_cells()) {
      for (int h = 0; h < 12; h += 5) {
        for (int pitch = -1; pitch <= 1; ++pitch) {
          EpisodeState st;
          st.pose = {cell, h, pitch};
          const auto obs = observe(scene, st);
          for (const auto& o : obs.visible_objects) CHECK(visible(scene, st.pose, o.cell));
          for (const auto& inst : scene.objects) {
            const bool listed = std::any_of(obs.visible_objects.begin(), obs.visible_objects.end(),
                                            [&](const auto& o) { return o.instance_id == inst.instance_id; });
            CHECK(listed == visible(scene, st.pose, inst.position));
          }
        }
      }
    }
  }
}
