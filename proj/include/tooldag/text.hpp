#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace tooldag::text {

std::string_view trim(std::string_view s);

// Splits on `sep` at bracket depth zero, outside double-quoted strings.
// Elements are trimmed. An all-blank input yields no elements.
std::vector<std::string> split_top_level(std::string_view s, char sep);

// Position of `needle` at depth zero outside quotes, or npos.
std::size_t find_top_level(std::string_view s, std::string_view needle);

std::size_t count_whitespace_tokens(std::string_view s);

// Lowercased maximal runs of ASCII letters and digits.
std::vector<std::string> word_tokens(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// JSON-style quoting for free-text fields.
std::string quote(std::string_view s);
// Inverse of quote(); throws std::invalid_argument on malformed input.
std::string unquote(std::string_view s);

// Lowercase, collapse internal whitespace.
std::string normalize_phrase(std::string_view s);

}  // namespace tooldag::text
