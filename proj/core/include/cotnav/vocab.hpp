#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cotnav {

inline constexpr std::size_t kNumCategories = 21;
inline constexpr std::size_t kNumRoomTypes = 8;

enum class RoomType : std::uint8_t {
  living_room = 0,
  kitchen,
  bedroom,
  bathroom,
  dining_room,
  hallway,
  office,
  unknown,
};

std::string_view to_string(RoomType room);
std::optional<RoomType> parse_room_type(std::string_view name);
RoomType room_type_at(std::size_t index);

/// Ordered object-category and room-type names. Feature layouts and prior
/// tables are indexed by position, so the order is part of the contract.
class CategoryVocab {
 public:
  /// The 21 ObjectNav categories, including the five held-out ones.
  static const CategoryVocab& standard();

  explicit CategoryVocab(std::vector<std::string> categories);

  const std::vector<std::string>& categories() const noexcept { return categories_; }
  std::size_t size() const noexcept { return categories_.size(); }
  const std::string& name(std::size_t index) const { return categories_.at(index); }

  std::optional<std::size_t> find(std::string_view category) const;
  /// Throws VocabularyError for names outside the vocabulary.
  std::size_t index_of(std::string_view category) const;
  bool contains(std::string_view category) const { return find(category).has_value(); }

  /// Hex SHA-256 over the ordered names; stored in model files.
  std::string hash() const;

 private:
  std::vector<std::string> categories_;
};

/// Categories held out for object-generalization evaluation.
const std::array<std::string_view, 5>& unseen_categories();

}  // namespace cotnav
