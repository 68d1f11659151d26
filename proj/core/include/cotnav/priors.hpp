#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

#include "cotnav/vocab.hpp"

namespace cotnav {

/// Commonsense co-occurrence tables used by scene generation and by the
/// rule-based reasoning backend.
///
/// object_room[c][r] is P(object c present | room type r); object_object[a][b]
/// is a symmetric proximity prior with unit diagonal. All entries lie in [0, 1].
struct CooccurrencePriors {
  std::array<std::array<double, kNumRoomTypes>, kNumCategories> object_room{};
  std::array<std::array<double, kNumCategories>, kNumCategories> object_object{};

  double room(std::size_t category, RoomType r) const {
    return object_room[category][static_cast<std::size_t>(r)];
  }
  double proximity(std::size_t a, std::size_t b) const { return object_object[a][b]; }

  /// Throws ValidationError naming the first offending entry.
  void validate(const CategoryVocab& vocab = CategoryVocab::standard()) const;

  /// The shipped table, parsed once.
  static const CooccurrencePriors& defaults();

  bool operator==(const CooccurrencePriors&) const = default;
};

/// Parses the sectioned TSV format:
///
///   [object_room]
///   category <tab> living_room <tab> ... unknown
///   chair    <tab> 0.60        <tab> ...
///   [object_object]
///   category <tab> chair <tab> table ...
///   ...
///
/// Lines starting with '#' and blank lines are ignored. Columns are matched by
/// header name, rows by category name; every cell must be present.
CooccurrencePriors parse_priors(std::string_view text,
                                const CategoryVocab& vocab = CategoryVocab::standard());

CooccurrencePriors load_priors(const std::filesystem::path& path,
                               const CategoryVocab& vocab = CategoryVocab::standard());

std::string format_priors(const CooccurrencePriors& priors,
                          const CategoryVocab& vocab = CategoryVocab::standard());

std::string_view default_priors_tsv();

}  // namespace cotnav
