#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace scenemem {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value);

// One parsed JSON object per non-blank line, with its 1-based line number.
struct JsonLine {
  std::size_t line_number = 0;
  nlohmann::json value;
};
std::vector<JsonLine> read_json_lines(const std::filesystem::path& path);

}  // namespace scenemem
