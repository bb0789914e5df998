#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace archface {

using Json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// see either the old or the new content, never a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Calls `on_line(json, line_number)` for each non-blank line. ParseError
// names the file and line on malformed JSON.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& on_line);

std::string percent_encode(std::string_view text);

// Lower-cased host of an http(s) URL, without port or credentials; empty
// when the URL has no recognisable authority.
std::string url_host(std::string_view url);

// Dumps with the settings used for every JSON artifact (2-space indent,
// trailing newline) so outputs are byte-comparable.
std::string dump_pretty(const Json& doc);

} // namespace archface
