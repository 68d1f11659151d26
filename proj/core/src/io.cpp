#include "cotnav/io.hpp"

#include <fstream>
#include <sstream>

#include "cotnav/errors.hpp"

namespace cotnav {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("write failed: " + path.string());
}

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

std::string make_jsonl(const OrderedJson& header, const std::vector<OrderedJson>& records) {
  std::string out = header.dump();
  out += '\n';
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

JsonlDocument parse_jsonl(std::string_view text, std::string_view expected_kind) {
  JsonlDocument doc;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty() || line == "\r") continue;
    Json value;
    try {
      value = Json::parse(line.begin(), line.end());
    } catch (const Json::parse_error& e) {
      throw ParseError(std::string(expected_kind) + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!value.is_object()) {
      throw ParseError(std::string(expected_kind) + ": line " + std::to_string(line_no) + ": expected an object");
    }
    if (!have_header) {
      if (!value.contains("kind") || value["kind"] != expected_kind || !value.contains("format_version")) {
        throw ParseError(std::string(expected_kind) + ": line " + std::to_string(line_no) +
                         ": missing or mismatched header record");
      }
      doc.header = std::move(value);
      have_header = true;
      continue;
    }
    doc.records.push_back(std::move(value));
  }
  if (!have_header) throw ParseError(std::string(expected_kind) + ": empty file");
  return doc;
}

JsonlDocument load_jsonl(const std::filesystem::path& path, std::string_view expected_kind) {
  return parse_jsonl(read_file(path), expected_kind);
}

OrderedJson jsonl_header(std::string_view kind, int format_version, std::string_view manifest_hash) {
  OrderedJson h;
  h["kind"] = kind;
  h["format_version"] = format_version;
  h["manifest_hash"] = manifest_hash;
  return h;
}

}  // namespace cotnav
