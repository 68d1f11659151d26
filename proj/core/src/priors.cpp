#include "cotnav/priors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "cotnav/errors.hpp"

namespace cotnav {
namespace {

enum class Section { none, object_room, object_object };

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail_at(std::size_t line, std::size_t column, const std::string& msg) {
  throw ParseError("priors: line " + std::to_string(line) + ", column " + std::to_string(column) +
                   ": " + msg);
}

}  // namespace

void CooccurrencePriors::validate(const CategoryVocab& vocab) const {
  auto check = [](double v, const std::string& where) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ValidationError("priors: " + where + " = " + std::to_string(v) + " is outside [0, 1]");
    }
  };
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    for (std::size_t r = 0; r < kNumRoomTypes; ++r) {
      check(object_room[c][r],
            "object_room[" + vocab.name(c) + "][" + std::string(to_string(room_type_at(r))) + "]");
    }
  }
  for (std::size_t a = 0; a < kNumCategories; ++a) {
    for (std::size_t b = 0; b < kNumCategories; ++b) {
      const std::string where = "object_object[" + vocab.name(a) + "][" + vocab.name(b) + "]";
      check(object_object[a][b], where);
      if (a == b && object_object[a][b] != 1.0) {
        throw ValidationError("priors: " + where + " must be 1 on the diagonal");
      }
      if (object_object[a][b] != object_object[b][a]) {
        throw ValidationError("priors: " + where + " is not symmetric");
      }
    }
  }
}

CooccurrencePriors parse_priors(std::string_view text, const CategoryVocab& vocab) {
  if (vocab.size() != kNumCategories) {
    throw VocabularyError("priors require a " + std::to_string(kNumCategories) + "-category vocabulary");
  }
  CooccurrencePriors priors;
  std::array<std::array<bool, kNumRoomTypes>, kNumCategories> seen_room{};
  std::array<std::array<bool, kNumCategories>, kNumCategories> seen_obj{};

  Section section = Section::none;
  std::vector<std::size_t> columns;  // column position -> table index
  bool have_header = false;
  bool any_section = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line == "[object_room]") {
        section = Section::object_room;
      } else if (line == "[object_object]") {
        section = Section::object_object;
      } else {
        fail_at(line_no, 1, "unknown section " + std::string(line));
      }
      any_section = true;
      have_header = false;
      columns.clear();
      continue;
    }
    if (section == Section::none) fail_at(line_no, 1, "data before any section header");

    auto cells = split_tabs(line);
    if (!have_header) {
      if (trim(cells[0]) != "category") fail_at(line_no, 1, "expected header starting with 'category'");
      for (std::size_t i = 1; i < cells.size(); ++i) {
        auto name = trim(cells[i]);
        std::optional<std::size_t> idx;
        if (section == Section::object_room) {
          if (auto r = parse_room_type(name)) idx = static_cast<std::size_t>(*r);
        } else {
          idx = vocab.find(name);
        }
        if (!idx) fail_at(line_no, i + 1, "unknown column '" + std::string(name) + "'");
        columns.push_back(*idx);
      }
      const std::size_t expected = section == Section::object_room ? kNumRoomTypes : kNumCategories;
      if (columns.size() != expected) {
        fail_at(line_no, 1, "expected " + std::to_string(expected) + " columns, got " +
                                std::to_string(columns.size()));
      }
      have_header = true;
      continue;
    }

    auto row = vocab.find(trim(cells[0]));
    if (!row) fail_at(line_no, 1, "unknown category '" + std::string(trim(cells[0])) + "'");
    if (cells.size() != columns.size() + 1) {
      fail_at(line_no, std::min(cells.size(), columns.size() + 1) + 1,
              "expected " + std::to_string(columns.size()) + " values, got " +
                  std::to_string(cells.size() - 1));
    }
    for (std::size_t i = 0; i < columns.size(); ++i) {
      auto field = trim(cells[i + 1]);
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        fail_at(line_no, i + 2, "not a number: '" + std::string(field) + "'");
      }
      if (section == Section::object_room) {
        priors.object_room[*row][columns[i]] = value;
        seen_room[*row][columns[i]] = true;
      } else {
        priors.object_object[*row][columns[i]] = value;
        seen_obj[*row][columns[i]] = true;
      }
    }
    if (end == text.size()) break;
  }

  if (!any_section) throw ParseError("priors: line 1, column 1: no [object_room] / [object_object] sections");
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    for (std::size_t r = 0; r < kNumRoomTypes; ++r) {
      if (!seen_room[c][r]) {
        throw ParseError("priors: missing object_room entry for " + vocab.name(c) + " / " +
                         std::string(to_string(room_type_at(r))));
      }
    }
    for (std::size_t b = 0; b < kNumCategories; ++b) {
      if (!seen_obj[c][b]) {
        throw ParseError("priors: missing object_object entry for " + vocab.name(c) + " / " + vocab.name(b));
      }
    }
  }
  priors.validate(vocab);
  return priors;
}

CooccurrencePriors load_priors(const std::filesystem::path& path, const CategoryVocab& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("priors: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_priors(ss.str(), vocab);
}

std::string format_priors(const CooccurrencePriors& priors, const CategoryVocab& vocab) {
  std::ostringstream out;
  out.precision(17);
  out << "[object_room]\ncategory";
  for (std::size_t r = 0; r < kNumRoomTypes; ++r) out << '\t' << to_string(room_type_at(r));
  out << '\n';
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    out << vocab.name(c);
    for (double v : priors.object_room[c]) out << '\t' << v;
    out << '\n';
  }
  out << "\n[object_object]\ncategory";
  for (const auto& name : vocab.categories()) out << '\t' << name;
  out << '\n';
  for (std::size_t a = 0; a < kNumCategories; ++a) {
    out << vocab.name(a);
    for (double v : priors.object_object[a]) out << '\t' << v;
    out << '\n';
  }
  return out.str();
}

const CooccurrencePriors& CooccurrencePriors::defaults() {
  static const CooccurrencePriors priors = parse_priors(default_priors_tsv());
  return priors;
}

}  // namespace cotnav
