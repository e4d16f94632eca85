#include "conewave/util.hpp"

#include <cstdio>

namespace conewave {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace conewave
