#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cams {

// Shortest decimal form that parses back to the same double.
inline std::string format_real(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("format_real failed");
  return std::string(buf, end);
}

inline double parse_real(std::string_view text) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw std::invalid_argument("not a real number: '" + std::string(text) + "'");
  }
  return value;
}

inline unsigned long long parse_count(std::string_view text) {
  unsigned long long value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw std::invalid_argument("not a nonnegative integer: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace cams
