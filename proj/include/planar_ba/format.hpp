#pragma once

#include <cstdio>
#include <string>

namespace planar_ba {

inline std::string format_double(double v, int precision = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

}  // namespace planar_ba
