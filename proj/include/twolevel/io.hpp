#ifndef TWOLEVEL_IO_HPP
#define TWOLEVEL_IO_HPP

#include <charconv>
#include <cmath>
#include <string>

namespace twolevel {

/// Shortest round-trip decimal representation, independent of the C locale.
inline std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace twolevel

#endif  // TWOLEVEL_IO_HPP
