#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace xlkb {

inline constexpr const char* kToolVersion = "0.1.0";

// Malformed or inconsistent data (files, records, invariant violations).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Transport or generation failures from an external provider.
class ProviderError : public std::runtime_error {
 public:
  explicit ProviderError(const std::string& what) : std::runtime_error(what) {}
};

// Bad command-line usage.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

std::string read_file(const std::filesystem::path& path);

// Writes via a temp file in the same directory, then renames into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Calls fn(record, line_number) for every non-empty line. Parse failures are
// rethrown as DataError naming the file and 1-based line number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn);

// ASCII-only lowercasing; bytes outside A-Z pass through untouched.
std::string ascii_lower(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

// Splits a UTF-8 string into codepoint-aligned byte spans. Invalid bytes are
// treated as single-byte codepoints.
std::vector<std::string_view> utf8_codepoints(std::string_view s);

// Shortest decimal representation that round-trips the double.
std::string format_double(double value);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace xlkb
