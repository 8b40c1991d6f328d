#pragma once

#include <charconv>
#include <string>

namespace stochastize {

/// Shortest decimal form that round-trips to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace stochastize
