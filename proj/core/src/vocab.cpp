#include "cotnav/vocab.hpp"

#include <algorithm>
#include <set>

#include "cotnav/errors.hpp"
#include "cotnav/hash.hpp"

namespace cotnav {
namespace {

constexpr std::array<std::string_view, kNumRoomTypes> kRoomNames = {
    "living_room", "kitchen", "bedroom", "bathroom", "dining_room", "hallway", "office", "unknown"};

}  // namespace

std::string_view to_string(RoomType room) { return kRoomNames.at(static_cast<std::size_t>(room)); }

std::optional<RoomType> parse_room_type(std::string_view name) {
  for (std::size_t i = 0; i < kRoomNames.size(); ++i) {
    if (kRoomNames[i] == name) return static_cast<RoomType>(i);
  }
  return std::nullopt;
}

RoomType room_type_at(std::size_t index) {
  if (index >= kNumRoomTypes) throw VocabularyError("room type index out of range");
  return static_cast<RoomType>(index);
}

const CategoryVocab& CategoryVocab::standard() {
  static const CategoryVocab vocab({
      "chair", "table", "picture", "cabinet", "cushion", "sofa", "bed",
      "chest_of_drawers", "plant", "sink", "toilet", "stool", "towel", "tv_monitor",
      "shower", "bathtub", "counter", "fireplace", "gym_equipment", "seating", "clothes",
  });
  return vocab;
}

CategoryVocab::CategoryVocab(std::vector<std::string> categories) : categories_(std::move(categories)) {
  std::set<std::string> seen;
  for (const auto& c : categories_) {
    if (c.empty()) throw VocabularyError("empty category name");
    if (!seen.insert(c).second) throw VocabularyError("duplicate category: " + c);
  }
}

std::optional<std::size_t> CategoryVocab::find(std::string_view category) const {
  auto it = std::find(categories_.begin(), categories_.end(), category);
  if (it == categories_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - categories_.begin());
}

std::size_t CategoryVocab::index_of(std::string_view category) const {
  if (auto i = find(category)) return *i;
  throw VocabularyError("unknown category: " + std::string(category));
}

std::string CategoryVocab::hash() const {
  std::string joined;
  for (const auto& c : categories_) {
    joined += c;
    joined += '\n';
  }
  return sha256_hex(joined);
}

const std::array<std::string_view, 5>& unseen_categories() {
  static constexpr std::array<std::string_view, 5> kUnseen = {"counter", "bed", "toilet",
                                                              "chest_of_drawers", "plant"};
  return kUnseen;
}

}  // namespace cotnav
