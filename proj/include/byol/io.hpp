#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace byol::io {

using Json = nlohmann::json;
namespace fs = std::filesystem;

std::string read_file(const fs::path& path);
std::vector<std::string> read_lines(const fs::path& path);

// Writes via a sibling temporary file and rename, so readers never observe a
// partially written file.
void write_file(const fs::path& path, std::string_view content);

// Calls `fn(record, line_number)` for every non-blank line. A line that is not
// a JSON object raises ParseError with the 1-based line number and the byte
// offset within the file.
void for_each_jsonl(const fs::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn);

// Same, over in-memory content; `source` names it in errors.
void for_each_jsonl(std::string_view content, const std::string& source,
                    const std::function<void(const Json&, std::size_t)>& fn);

// Splits on '\t' without collapsing empty fields.
std::vector<std::string> split_tab(std::string_view line);

// One compact JSON object per line, keys in insertion order of `rows`.
std::string to_jsonl(const std::vector<Json>& rows);

// Fixed-width plain-text table.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

// Round half to even at `places` decimals and format.
std::string fixed(double value, int places = 2);

// Shortest decimal that round-trips through double.
std::string shortest(double value);

}  // namespace byol::io
