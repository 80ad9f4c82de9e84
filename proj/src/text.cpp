#include "tooldag/text.hpp"

#include <json.hpp>

#include <cctype>
#include <stdexcept>

namespace tooldag::text {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

namespace {

template <typename Fn>
void scan_top_level(std::string_view s, Fn&& at_depth_zero) {
  int depth = 0;
  bool in_quote = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_quote) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_quote = false;
      }
      continue;
    }
    switch (c) {
      case '"': in_quote = true; break;
      case '(': case '[': case '{': ++depth; break;
      case ')': case ']': case '}': --depth; break;
      default:
        if (depth == 0 && !at_depth_zero(i)) return;
    }
  }
}

}  // namespace

std::vector<std::string> split_top_level(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  scan_top_level(s, [&](std::size_t i) {
    if (s[i] == sep) {
      out.emplace_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
    return true;
  });
  out.emplace_back(trim(s.substr(start)));
  return out;
}

std::size_t find_top_level(std::string_view s, std::string_view needle) {
  std::size_t found = std::string_view::npos;
  scan_top_level(s, [&](std::size_t i) {
    if (s.substr(i, needle.size()) == needle) {
      found = i;
      return false;
    }
    return true;
  });
  return found;
}

std::size_t count_whitespace_tokens(std::string_view s) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : s) {
    bool ws = std::isspace(static_cast<unsigned char>(c));
    if (!ws && !in_token) ++n;
    in_token = !ws;
  }
  return n;
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string quote(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') {
    throw std::invalid_argument("expected a quoted string");
  }
  auto j = nlohmann::json::parse(s, nullptr, false);
  if (j.is_discarded() || !j.is_string()) throw std::invalid_argument("bad string literal");
  return j.get<std::string>();
}

std::string normalize_phrase(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace tooldag::text
