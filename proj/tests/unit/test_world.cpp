#include <doctest.h>

#include <algorithm>
#include <set>

#include "cotnav/errors.hpp"
#include "cotnav/priors.hpp"
#include "cotnav/scene.hpp"
#include "cotnav/vocab.hpp"

using namespace cotnav;

namespace {

// Independent flood fill: counts floor cells reachable from the first floor cell.
std::size_t reachable_floor(const Scene& s) {
  std::vector<Cell> stack;
  std::set<std::pair<int, int>> seen;
  for (int y = 0; y < s.height && stack.empty(); ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (s.is_floor({x, y})) {
        stack.push_back({x, y});
        seen.insert({x, y});
        break;
      }
    }
  }
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    const int dx[] = {1, -1, 0, 0};
    const int dy[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const Cell n{c.x + dx[k], c.y + dy[k]};
      if (s.is_floor(n) && seen.insert({n.x, n.y}).second) stack.push_back(n);
    }
  }
  return seen.size();
}

}  // namespace

TEST_SUITE("world") {
  TEST_CASE("vocabulary holds 21 unique categories including the held-out five") {
    const auto& v = CategoryVocab::standard();
    CHECK(v.size() == 21);
    std::set<std::string> names(v.categories().begin(), v.categories().end());
    CHECK(names.size() == 21);
    for (auto c : unseen_categories()) CHECK(v.contains(c));
    CHECK_THROWS_AS(v.index_of("piano"), VocabularyError);
    CHECK(v.hash() == CategoryVocab(v.categories()).hash());
  }

  TEST_CASE("default priors respect the commonsense examples") {
    const auto& p = CooccurrencePriors::defaults();
    const auto& v = CategoryVocab::standard();
    CHECK_NOTHROW(p.validate(v));
    const auto tv = v.index_of("tv_monitor");
    CHECK(p.room(tv, RoomType::living_room) > p.room(tv, RoomType::bathroom));
    for (std::size_t a = 0; a < v.size(); ++a) {
      CHECK(p.proximity(a, a) == 1.0);
      for (std::size_t b = 0; b < v.size(); ++b) CHECK(p.proximity(a, b) == p.proximity(b, a));
    }
  }

  TEST_CASE("priors text round-trips and rejects bad tables") {
    const auto& p = CooccurrencePriors::defaults();
    CHECK(parse_priors(format_priors(p)) == p);
    CHECK_THROWS_AS(parse_priors(""), ParseError);

    auto bad = p;
    bad.object_room[0][0] = 1.5;
    CHECK_THROWS_AS(parse_priors(format_priors(bad)), ValidationError);

    std::string text = format_priors(p);
    const auto pos = text.find("0.", text.find("[object_object]"));
    text.replace(pos, 4, "abc!");
    try {
      parse_priors(text);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
  }

  TEST_CASE("generated scene has the requested rooms and one connected floor") {
    const Scene s = generate_scene(7, 16, 16, 3);
    CHECK(s.rooms.size() == 3);
    CHECK_NOTHROW(s.validate());
    CHECK(reachable_floor(s) == s.floor_cells().size());
  }

  TEST_CASE("connectivity holds across many seeds and room counts") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const int rooms = 2 + static_cast<int>(seed % 5);
      const Scene s = generate_scene(seed, 16, 16, rooms);
      CAPTURE(seed);
      CHECK(static_cast<int>(s.rooms.size()) == rooms);
      CHECK(reachable_floor(s) == s.floor_cells().size());
      for (const auto& o : s.objects) {
        CHECK(s.is_floor(o.position));
        int owners = 0;
        for (const auto& r : s.rooms) owners += r.extent.contains(o.position) ? 1 : 0;
        CHECK(owners == 1);
      }
      // Rooms plus their doorways tile the floor exactly once.
      std::size_t covered = 0;
      for (const auto& r : s.rooms) covered += static_cast<std::size_t>(r.extent.area()) + r.doorways.size();
      CHECK(covered == s.floor_cells().size());
    }
  }

  TEST_CASE("scene generation is deterministic and serialization round-trips") {
    const auto a = serialize_scene(generate_scene(7, 16, 16, 3));
    const auto b = serialize_scene(generate_scene(7, 16, 16, 3));
    CHECK(a == b);
    CHECK(deserialize_scene(a) == generate_scene(7, 16, 16, 3));
    CHECK(serialize_scene(deserialize_scene(a)) == a);
  }

  TEST_CASE("too many rooms for the grid is a sizing error") {
    CHECK_THROWS_AS(generate_scene(7, 8, 8, 12), SizingError);
  }

  TEST_CASE("malformed scene text never yields a partial scene") {
    const auto text = serialize_scene(generate_scene(3, 12, 12, 2));
    CHECK_THROWS_AS(deserialize_scene(text.substr(0, text.size() / 2)), ParseError);
    CHECK_THROWS_AS(deserialize_scene("{}"), Error);
  }

  TEST_CASE("an object on a wall cell is refused at serialization") {
    Scene s = generate_scene(5, 12, 12, 2);
    s.objects.front().position = {0, 0};
    CHECK_THROWS_AS(serialize_scene(s), ValidationError);
  }
}
