#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cotnav/grid.hpp"
#include "cotnav/priors.hpp"
#include "cotnav/vocab.hpp"

namespace cotnav {

inline constexpr int kSceneFormatVersion = 1;
inline constexpr int kMinRoomSide = 3;

enum class CellKind : std::uint8_t { floor, wall };

/// Inclusive cell rectangle.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  int area() const { return width() * height(); }
  bool contains(Cell c) const { return c.x >= x0 && c.x <= x1 && c.y >= y0 && c.y <= y1; }

  bool operator==(const Rect&) const = default;
};

/// A typed rectangular room. Doorway cells punched through the wall shared
/// with a neighbouring room belong to exactly one of the two rooms.
struct Room {
  RoomType type = RoomType::unknown;
  Rect extent;
  std::vector<Cell> doorways;

  bool contains(Cell c) const;
  bool operator==(const Room&) const = default;
};

struct ObjectInstance {
  int instance_id = 0;
  std::string category;
  Cell position;

  bool operator==(const ObjectInstance&) const = default;
};

struct Scene {
  std::string id;
  int width = 0;
  int height = 0;
  double cell_size_m = 0.25;
  std::vector<CellKind> cells;  // row-major, width * height
  std::vector<Room> rooms;
  std::vector<ObjectInstance> objects;

  GridSize size() const { return {width, height}; }
  bool in_bounds(Cell c) const { return size().contains(c); }
  bool is_floor(Cell c) const { return in_bounds(c) && cells[size().index(c)] == CellKind::floor; }
  bool is_wall(Cell c) const { return !is_floor(c); }

  std::optional<std::size_t> room_of(Cell c) const;
  std::vector<Cell> instances_of(std::string_view category) const;
  bool has_category(std::string_view category) const;
  /// Distinct categories present, in vocabulary order when `vocab` knows them.
  std::vector<std::string> categories_present(const CategoryVocab& vocab = CategoryVocab::standard()) const;
  std::vector<Cell> floor_cells() const;

  /// Throws ValidationError describing the first violated invariant.
  void validate() const;

  bool operator==(const Scene&) const = default;
};

/// Recursive binary partition of the interior into rectangular rooms
/// separated by one-cell walls, one doorway per pair of rooms sharing a wall,
/// and objects sampled from the room priors. Pure function of its inputs.
Scene generate_scene(std::uint64_t seed, int width, int height, int room_count,
                     const CategoryVocab& vocab = CategoryVocab::standard(),
                     const CooccurrencePriors& priors = CooccurrencePriors::defaults());

/// JSON document with `format_version`. Refuses scenes that fail validate().
std::string serialize_scene(const Scene& scene);
/// Throws ParseError on malformed input and ValidationError on invariant
/// violations; never returns a partially built scene.
Scene deserialize_scene(std::string_view text);

void save_scene(const Scene& scene, const std::filesystem::path& path);
Scene load_scene(const std::filesystem::path& path);

/// ASCII rendering: '#' wall, '.' floor, first letter of an object category.
std::string render_ascii(const Scene& scene);

}  // namespace cotnav
