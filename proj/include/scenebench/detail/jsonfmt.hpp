#pragma once

#include <cstdio>
#include <string>

namespace scenebench::detail {

// Shortest-form number with up to 6 significant digits; integral values print
// without a decimal point ("23", "0.4"). Stable under parse -> format;
// negative zero is canonicalized to "0" because JSON readers treat a bare
// "-0" as the integer zero and would drop the sign anyway.
inline std::string fmt_g6(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Fixed-point with n decimals, used where a column width is pinned. Values
// that round to zero print without a sign.
inline std::string fmt_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string out = buf;
  if (out.size() > 1 && out[0] == '-' &&
      out.find_first_not_of("0.", 1) == std::string::npos) {
    out.erase(0, 1);
  }
  return out;
}

// Re-indents a serialized JSON block for splicing into a parent document:
// strips the trailing newline and prefixes every line but the first.
inline std::string indent_tail(const std::string& block, int spaces) {
  std::string body = block;
  while (!body.empty() && body.back() == '\n') body.pop_back();
  const std::string pad(static_cast<std::size_t>(spaces), ' ');
  std::string out;
  out.reserve(body.size() + 64);
  for (std::size_t i = 0; i < body.size(); ++i) {
    out += body[i];
    if (body[i] == '\n') out += pad;
  }
  return out;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

}  // namespace scenebench::detail
