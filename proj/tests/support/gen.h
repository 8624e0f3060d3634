#pragma once

// Small hand-rolled generators for property tests. Every suite seeds its own
// engine so failures reproduce.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace memharvest::gen {

using Engine = std::mt19937_64;

inline std::size_t size(Engine& rng, std::size_t max) {
  return std::uniform_int_distribution<std::size_t>(0, max)(rng);
}

inline bool coin(Engine& rng, double p = 0.5) {
  return std::bernoulli_distribution(p)(rng);
}

template <typename T>
const T& pick(Engine& rng, const std::vector<T>& items) {
  return items[size(rng, items.size() - 1)];
}

inline std::string bytes(Engine& rng, std::size_t max_len) {
  std::string out(size(rng, max_len), '\0');
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& c : out)
    c = static_cast<char>(byte(rng));
  return out;
}

inline void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out += static_cast<char>(c);
  } else if (c < 0x800) {
    out += static_cast<char>(0xC0 | (c >> 6));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else if (c < 0x10000) {
    out += static_cast<char>(0xE0 | (c >> 12));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (c >> 18));
    out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  }
}

// Text biased towards the interesting cases for whitespace handling: ASCII
// and Unicode spaces, controls, zero-width characters, letters, and the odd
// invalid byte.
inline std::string messy_text(Engine& rng, std::size_t max_len) {
  static const std::vector<char32_t> specials = {
      U' ',    U'\t',   U'\n',   U'\r',   U'\f',   U'\v',   0x00,    0x01,    0x1F,   0x7F,
      0x85,    0xA0,    0x1680,  0x2000,  0x2009,  0x200A,  0x200B,  0x2028,  0x2029, 0x202F,
      0x205F,  0x2060,  0x3000,  0xFEFF,  U'a',    U'Z',    U'7',    U'<',    U'&',   0xE9,
      0x141,   0x6771,  0x1F600, U'[',    U']'};
  std::string out;
  std::size_t n = size(rng, max_len);
  for (std::size_t i = 0; i < n; ++i) {
    int kind = static_cast<int>(size(rng, 9));
    if (kind < 6)
      append_utf8(out, pick(rng, specials));
    else if (kind < 9)
      out += static_cast<char>('a' + size(rng, 25));
    else
      out += static_cast<char>(0x80 + size(rng, 0x7F));  // stray byte
  }
  return out;
}

inline std::string word(Engine& rng, std::size_t max_len = 8) {
  std::string out;
  std::size_t n = 1 + size(rng, max_len - 1);
  for (std::size_t i = 0; i < n; ++i)
    out += static_cast<char>('a' + size(rng, 25));
  return out;
}

// Random, not necessarily well-formed, HTML built from a fixed vocabulary.
inline std::string html_soup(Engine& rng, std::size_t pieces) {
  static const std::vector<std::string> parts = {
      "<p>", "</p>", "<div id=\"wm-ipp\">", "<div id=\"HEADER\">", "<div>", "</div>", "<table>", "<tr>",
      "<td>", "</td>", "</table>", "<script>var x = '<p>';</script>", "<style>p{}</style>", "<br>", "<b>",
      "</b>", "<li>", "<ul>", "</ul>", "&amp;", "&lt;", "&nbsp;", " ", "\n", "<!-- c -->", "<noscript>",
      "</noscript>", "<table id=\"hashtags\">", "<meta property=\"og:site_name\" content=\"archive.is\">",
      "<span class=x>", "</span>", "<frameset>", "<html>", "<body>", "</body>", "<head>", "<title>", "</title>"};
  std::string out;
  for (std::size_t i = 0; i < pieces; ++i)
    out += coin(rng, 0.7) ? pick(rng, parts) : word(rng);
  return out;
}

}  // namespace memharvest::gen
