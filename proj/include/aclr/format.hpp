#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace aclr {

/// Shortest-faithful decimal for CSV cells: %.17g round-trips doubles
/// exactly. NaN renders as an empty cell.
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace aclr
