#pragma once

#include <cstdio>
#include <string>

namespace vafnet {

// Round-trip decimal text for a double; stable across runs.
inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace vafnet
