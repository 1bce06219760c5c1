#pragma once

#include <cstdio>
#include <string>

namespace fjres {

/// Round-trip decimal form used in every CSV and report.
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace fjres
