#pragma once

#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace scr {

// Hexfloat text round-trips doubles bit-exactly.
inline std::string double_to_hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

inline double hex_to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw std::invalid_argument("bad float literal: " + s);
  return v;
}

}  // namespace scr
