#include "cotnav/scene.hpp"

#include <algorithm>
#include <set>

#include "cotnav/errors.hpp"
#include "cotnav/io.hpp"
#include "cotnav/random.hpp"

namespace cotnav {

bool Room::contains(Cell c) const {
  return extent.contains(c) || std::find(doorways.begin(), doorways.end(), c) != doorways.end();
}

std::optional<std::size_t> Scene::room_of(Cell c) const {
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    if (rooms[i].contains(c)) return i;
  }
  return std::nullopt;
}

std::vector<Cell> Scene::instances_of(std::string_view category) const {
  std::vector<Cell> out;
  for (const auto& o : objects) {
    if (o.category == category) out.push_back(o.position);
  }
  return out;
}

bool Scene::has_category(std::string_view category) const {
  return std::any_of(objects.begin(), objects.end(), [&](const auto& o) { return o.category == category; });
}

std::vector<std::string> Scene::categories_present(const CategoryVocab& vocab) const {
  std::vector<std::string> out;
  for (const auto& name : vocab.categories()) {
    if (has_category(name)) out.push_back(name);
  }
  for (const auto& o : objects) {
    if (!vocab.contains(o.category) && std::find(out.begin(), out.end(), o.category) == out.end()) {
      out.push_back(o.category);
    }
  }
  return out;
}

std::vector<Cell> Scene::floor_cells() const {
  std::vector<Cell> out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] == CellKind::floor) out.push_back(size().cell(i));
  }
  return out;
}

void Scene::validate() const {
  auto fail = [&](const std::string& msg) { throw ValidationError("scene '" + id + "': " + msg); };
  if (width <= 0 || height <= 0) fail("non-positive dimensions");
  if (cells.size() != size().area()) fail("cell count does not match width * height");
  if (!(cell_size_m > 0.0)) fail("cell_size_m must be positive");

  for (std::size_t i = 0; i < rooms.size(); ++i) {
    const auto& r = rooms[i];
    if (r.extent.x0 > r.extent.x1 || r.extent.y0 > r.extent.y1) fail("room " + std::to_string(i) + " has empty extent");
    for (int y = r.extent.y0; y <= r.extent.y1; ++y) {
      for (int x = r.extent.x0; x <= r.extent.x1; ++x) {
        if (!is_floor({x, y})) fail("room " + std::to_string(i) + " extent covers a wall or out-of-grid cell");
      }
    }
    for (Cell d : r.doorways) {
      if (!is_floor(d)) fail("room " + std::to_string(i) + " doorway is not a floor cell");
    }
  }

  const auto floors = floor_cells();
  for (Cell c : floors) {
    std::size_t owners = 0;
    for (const auto& r : rooms) owners += r.contains(c) ? 1 : 0;
    if (owners != 1) {
      fail("floor cell (" + std::to_string(c.x) + "," + std::to_string(c.y) + ") belongs to " +
           std::to_string(owners) + " rooms");
    }
  }

  if (!floors.empty()) {
    const Cell start = floors.front();
    auto dist = bfs_distances(size(), std::span(&start, 1), [&](Cell c) { return is_floor(c); });
    for (Cell c : floors) {
      if (dist[size().index(c)] == kUnreached) fail("floor cells are not 4-connected");
    }
  }

  std::set<int> ids;
  for (const auto& o : objects) {
    if (!ids.insert(o.instance_id).second) fail("duplicate object instance id " + std::to_string(o.instance_id));
    if (o.category.empty()) fail("object with empty category");
    if (!is_floor(o.position)) fail("object " + std::to_string(o.instance_id) + " is not on a floor cell");
  }
}

namespace {

// Splits `r` with a one-cell wall; both halves keep sides >= kMinRoomSide.
bool can_split(const Rect& r, bool vertical) {
  const int side = vertical ? r.width() : r.height();
  return side >= 2 * kMinRoomSide + 1;
}

std::pair<Rect, Rect> split_rect(const Rect& r, bool vertical, Rng& rng) {
  const int side = vertical ? r.width() : r.height();
  // First half length k in [kMinRoomSide, side - kMinRoomSide - 1].
  const int lo = kMinRoomSide;
  const int hi = side - kMinRoomSide - 1;
  const int k = lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1)));
  if (vertical) {
    return {Rect{r.x0, r.y0, r.x0 + k - 1, r.y1}, Rect{r.x0 + k + 1, r.y0, r.x1, r.y1}};
  }
  return {Rect{r.x0, r.y0, r.x1, r.y0 + k - 1}, Rect{r.x0, r.y0 + k + 1, r.x1, r.y1}};
}

}  // namespace

Scene generate_scene(std::uint64_t seed, int width, int height, int room_count, const CategoryVocab& vocab,
                     const CooccurrencePriors& priors) {
  if (width < 8 || height < 8) throw ValidationError("generate_scene: width and height must be >= 8");
  if (room_count < 2 || room_count > 12) throw ValidationError("generate_scene: room_count must be in [2, 12]");
  if (vocab.size() != kNumCategories) throw VocabularyError("generate_scene: vocabulary must have 21 categories");

  Rng rng(seed);
  Scene scene;
  scene.id = "scene-" + std::to_string(seed);
  scene.width = width;
  scene.height = height;
  scene.cells.assign(scene.size().area(), CellKind::wall);

  std::vector<Rect> leaves{Rect{1, 1, width - 2, height - 2}};
  while (static_cast<int>(leaves.size()) < room_count) {
    // Largest splittable leaf first; ties go to the lowest index.
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!can_split(leaves[i], true) && !can_split(leaves[i], false)) continue;
      if (!pick || leaves[i].area() > leaves[*pick].area()) pick = i;
    }
    if (!pick) {
      throw SizingError("generate_scene: cannot partition a " + std::to_string(width) + "x" +
                        std::to_string(height) + " grid into " + std::to_string(room_count) +
                        " rooms with minimum side " + std::to_string(kMinRoomSide));
    }
    const Rect r = leaves[*pick];
    bool vertical;
    if (can_split(r, true) && can_split(r, false)) {
      vertical = r.width() == r.height() ? rng.bernoulli(0.5) : r.width() > r.height();
    } else {
      vertical = can_split(r, true);
    }
    auto [a, b] = split_rect(r, vertical, rng);
    leaves[*pick] = a;
    leaves.insert(leaves.begin() + static_cast<std::ptrdiff_t>(*pick) + 1, b);
  }

  scene.rooms.resize(leaves.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    scene.rooms[i].extent = leaves[i];
    for (int y = leaves[i].y0; y <= leaves[i].y1; ++y) {
      for (int x = leaves[i].x0; x <= leaves[i].x1; ++x) scene.cells[scene.size().index({x, y})] = CellKind::floor;
    }
  }

  // One doorway per pair of rooms that face each other across a single wall cell.
  auto leaf_of = [&](Cell c) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (leaves[i].contains(c)) return i;
    }
    return std::nullopt;
  };
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    for (std::size_t j = i + 1; j < leaves.size(); ++j) {
      std::vector<Cell> candidates;
      for (int y = 1; y < height - 1; ++y) {
        for (int x = 1; x < width - 1; ++x) {
          const Cell c{x, y};
          if (scene.cells[scene.size().index(c)] != CellKind::wall) continue;
          for (auto [d1, d2] : {std::pair{Direction::west, Direction::east}, std::pair{Direction::north, Direction::south}}) {
            auto la = leaf_of(neighbor(c, d1));
            auto lb = leaf_of(neighbor(c, d2));
            if (la && lb && ((*la == i && *lb == j) || (*la == j && *lb == i))) candidates.push_back(c);
          }
        }
      }
      if (candidates.empty()) continue;
      const Cell door = candidates[rng.index(candidates.size())];
      scene.cells[scene.size().index(door)] = CellKind::floor;
      scene.rooms[i].doorways.push_back(door);
    }
  }

  // Room types: each concrete type once in shuffled order, then uniform draws.
  std::vector<RoomType> types;
  for (std::size_t t = 0; t + 1 < kNumRoomTypes; ++t) types.push_back(room_type_at(t));
  rng.shuffle(std::span(types));
  for (std::size_t i = 0; i < scene.rooms.size(); ++i) {
    scene.rooms[i].type = i < types.size() ? types[i] : types[rng.index(types.size())];
  }

  int next_id = 0;
  for (auto& room : scene.rooms) {
    std::vector<Cell> free_cells;
    for (int y = room.extent.y0; y <= room.extent.y1; ++y) {
      for (int x = room.extent.x0; x <= room.extent.x1; ++x) free_cells.push_back({x, y});
    }
    const int count = std::max(1, room.extent.area() / 10);
    std::array<double, kNumCategories> weights{};
    for (std::size_t c = 0; c < kNumCategories; ++c) weights[c] = priors.room(c, room.type);
    for (int k = 0; k < count && !free_cells.empty(); ++k) {
      const std::size_t category = rng.weighted(weights);
      const std::size_t slot = rng.index(free_cells.size());
      scene.objects.push_back({next_id++, vocab.name(category), free_cells[slot]});
      free_cells.erase(free_cells.begin() + static_cast<std::ptrdiff_t>(slot));
    }
  }

  scene.validate();
  return scene;
}

std::string serialize_scene(const Scene& scene) {
  scene.validate();
  OrderedJson doc;
  doc["format_version"] = kSceneFormatVersion;
  doc["id"] = scene.id;
  doc["width"] = scene.width;
  doc["height"] = scene.height;
  doc["cell_size_m"] = scene.cell_size_m;
  auto& grid = doc["grid"] = OrderedJson::array();
  for (int y = 0; y < scene.height; ++y) {
    std::string row;
    for (int x = 0; x < scene.width; ++x) row += scene.is_floor({x, y}) ? '.' : '#';
    grid.push_back(row);
  }
  auto& rooms = doc["rooms"] = OrderedJson::array();
  for (const auto& r : scene.rooms) {
    OrderedJson room;
    room["type"] = to_string(r.type);
    room["extent"] = {r.extent.x0, r.extent.y0, r.extent.x1, r.extent.y1};
    room["doorways"] = OrderedJson::array();
    for (Cell d : r.doorways) room["doorways"].push_back({d.x, d.y});
    rooms.push_back(std::move(room));
  }
  auto& objects = doc["objects"] = OrderedJson::array();
  for (const auto& o : scene.objects) {
    objects.push_back({{"id", o.instance_id}, {"category", o.category}, {"cell", {o.position.x, o.position.y}}});
  }
  return doc.dump(1) + "\n";
}

namespace {

Cell cell_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("scene: cell must be [x, y]");
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

}  // namespace

Scene deserialize_scene(std::string_view text) {
  const Json doc = parse_json(text, "scene");
  Scene scene;
  try {
    if (!doc.is_object()) throw ParseError("scene: expected a JSON object");
    const int version = doc.at("format_version").get<int>();
    if (version != kSceneFormatVersion) {
      throw ParseError("scene: unsupported format_version " + std::to_string(version));
    }
    scene.id = doc.at("id").get<std::string>();
    scene.width = doc.at("width").get<int>();
    scene.height = doc.at("height").get<int>();
    scene.cell_size_m = doc.at("cell_size_m").get<double>();
    const auto& grid = doc.at("grid");
    if (scene.width <= 0 || scene.height <= 0 || !grid.is_array() ||
        grid.size() != static_cast<std::size_t>(scene.height)) {
      throw ParseError("scene: grid row count does not match height");
    }
    scene.cells.reserve(scene.size().area());
    for (const auto& row : grid) {
      const auto s = row.get<std::string>();
      if (s.size() != static_cast<std::size_t>(scene.width)) throw ParseError("scene: grid row width mismatch");
      for (char ch : s) {
        if (ch == '.') scene.cells.push_back(CellKind::floor);
        else if (ch == '#') scene.cells.push_back(CellKind::wall);
        else throw ParseError(std::string("scene: unexpected grid character '") + ch + "'");
      }
    }
    for (const auto& r : doc.at("rooms")) {
      Room room;
      auto type = parse_room_type(r.at("type").get<std::string>());
      if (!type) throw ParseError("scene: unknown room type " + r.at("type").get<std::string>());
      room.type = *type;
      const auto& e = r.at("extent");
      if (!e.is_array() || e.size() != 4) throw ParseError("scene: extent must be [x0, y0, x1, y1]");
      room.extent = {e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<int>()};
      for (const auto& d : r.at("doorways")) room.doorways.push_back(cell_from(d));
      scene.rooms.push_back(std::move(room));
    }
    for (const auto& o : doc.at("objects")) {
      scene.objects.push_back({o.at("id").get<int>(), o.at("category").get<std::string>(), cell_from(o.at("cell"))});
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("scene: ") + e.what());
  }
  scene.validate();
  return scene;
}

void save_scene(const Scene& scene, const std::filesystem::path& path) { write_file(path, serialize_scene(scene)); }

Scene load_scene(const std::filesystem::path& path) { return deserialize_scene(read_file(path)); }

std::string render_ascii(const Scene& scene) {
  std::string out;
  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      char ch = scene.is_floor({x, y}) ? '.' : '#';
      for (const auto& o : scene.objects) {
        if (o.position == Cell{x, y}) ch = o.category.front();
      }
      out += ch;
    }
    out += '\n';
  }
  return out;
}

}  // namespace cotnav
