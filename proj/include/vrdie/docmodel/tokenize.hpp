#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vrdie::doc {

struct Token {
  std::string surface;  // lowercased
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  bool operator==(const Token&) const = default;
};

struct TokenSequence {
  std::vector<Token> tokens;
  std::vector<int> bio_tags;  // empty, or one tag id per token

  std::size_t size() const { return tokens.size(); }
  bool labeled() const { return !bio_tags.empty() || tokens.empty(); }
};

namespace detail {

inline bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline bool is_punct(unsigned char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

}  // namespace detail

// Whitespace split, then every leading and trailing ASCII punctuation character
// of a chunk becomes its own token. Offsets index the original string.
inline TokenSequence tokenize(std::string_view text) {
  TokenSequence seq;
  auto emit = [&](std::size_t b, std::size_t e) {
    seq.tokens.push_back({detail::ascii_lower(text.substr(b, e - b)), b, e});
  };
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && detail::is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i == n) break;
    std::size_t end = i;
    while (end < n && !detail::is_space(static_cast<unsigned char>(text[end]))) ++end;
    std::size_t b = i, e = end;
    while (b < e && detail::is_punct(static_cast<unsigned char>(text[b]))) {
      emit(b, b + 1);
      ++b;
    }
    std::size_t core_end = e;
    while (core_end > b && detail::is_punct(static_cast<unsigned char>(text[core_end - 1]))) --core_end;
    if (core_end > b) emit(b, core_end);
    for (std::size_t p = core_end; p < e; ++p) emit(p, p + 1);
    i = end;
  }
  return seq;
}

}  // namespace vrdie::doc
