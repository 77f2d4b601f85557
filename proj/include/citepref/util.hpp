#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace citepref {

using Json = nlohmann::json;

/// Selects the serial reference path or the OpenMP path of a batch kernel.
enum class Execution { Serial, Parallel };

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// First 8 bytes of the SHA-256 digest, big-endian. Used to derive RNG seeds.
std::uint64_t sha256_u64(std::string_view data);

/// Number of Unicode code points in a UTF-8 string (invalid bytes count as one each).
std::size_t utf8_length(std::string_view s);

/// "252,000"
std::string group_thousands(std::uint64_t n);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

/// Lower-cased alphanumeric word tokens.
std::vector<std::string> word_tokens(std::string_view text);

/// Sentence split on ., !, ? and newlines. Pieces are trimmed, empties dropped.
std::vector<std::string> split_sentences(std::string_view text);

/// Case-insensitive whole-word (or whole-phrase) search. Returns npos when absent.
std::size_t find_word_ci(std::string_view haystack, std::string_view needle);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Calls `fn(line_number, json)` for each non-blank line; throws JsonlError on malformed lines.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const Json&)>& fn);

class JsonlError : public std::runtime_error {
 public:
  JsonlError(std::filesystem::path path, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::size_t line_;
};

}  // namespace citepref
