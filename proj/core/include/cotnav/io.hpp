#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cotnav {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: parent directories are created.
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Parses a JSON document, rethrowing failures as ParseError with `what` as context.
Json parse_json(std::string_view text, std::string_view what);

/// Line-delimited records. The first line is a header object carrying
/// `format_version`, `kind`, and (optionally) `manifest_hash`.
struct JsonlDocument {
  Json header;
  std::vector<Json> records;
};

std::string make_jsonl(const OrderedJson& header, const std::vector<OrderedJson>& records);
/// Throws ParseError naming the 1-based line of the first malformed record, or
/// when the header is missing or its kind differs from `expected_kind`.
JsonlDocument parse_jsonl(std::string_view text, std::string_view expected_kind);
JsonlDocument load_jsonl(const std::filesystem::path& path, std::string_view expected_kind);

OrderedJson jsonl_header(std::string_view kind, int format_version, std::string_view manifest_hash);

}  // namespace cotnav
