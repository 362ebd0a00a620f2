#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace insec {

// Small text utilities shared by the template, tokenizer, and mock engine
// modules. Everything operates on UTF-8 byte strings; only the tokenizer
// needs scalar-level decoding.

/// The cursor line is everything after the last newline in the prefix (the
/// entire prefix when it has no newline).
inline std::string_view cursor_line(std::string_view prefix) {
  const auto pos = prefix.rfind('\n');
  return pos == std::string_view::npos ? prefix : prefix.substr(pos + 1);
}

/// Leading run of spaces and tabs.
inline std::string_view leading_indent(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  return line.substr(0, i);
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

/// Split into lines on '\n'. The trailing segment after the last newline is
/// always included, so "a\n" -> {"a", ""} and "" -> {""}.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return lines;
}

/// A comment line for the purposes of the mock engine: first non-whitespace
/// characters are "#" or "//". The mock does not know the task language, so
/// both marker families count.
inline bool is_comment_line(std::string_view line) {
  const auto body = trim(line);
  return body.starts_with("#") || body.starts_with("//");
}

/// Drop comment lines, keeping everything else byte-for-byte (used to decide
/// whether a perturbed prompt differs from an original outside comments).
inline std::string strip_comment_lines(std::string_view text) {
  std::string out;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_comment_line(lines[i])) continue;
    if (!out.empty()) out.push_back('\n');
    out.append(lines[i]);
  }
  return out;
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
  return to_lower_ascii(haystack).find(to_lower_ascii(needle)) !=
         std::string::npos;
}

// --- UTF-8 -----------------------------------------------------------------

/// Decode the scalar starting at `pos`; returns its byte length and leaves
/// the code point in `cp`. Invalid sequences decode as a single byte so that
/// splitting and re-concatenation is always lossless.
inline std::size_t decode_utf8(std::string_view s, std::size_t pos,
                               std::uint32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  std::size_t len = 1;
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    cp = b0;
    return 1;
  }
  if (pos + len > s.size()) {
    cp = b0;
    return 1;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) {
      cp = b0;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

inline std::string encode_utf8(std::uint32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

}  // namespace insec
