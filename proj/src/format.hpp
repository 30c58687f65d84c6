#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace releaseflow::detail {

// Shortest decimal that still has at least six places and parses back to the
// same double.
inline std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  if (std::strtod(buf, nullptr) == v) return buf;
  for (int precision = 7; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

}  // namespace releaseflow::detail
