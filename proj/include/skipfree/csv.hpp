#pragma once

// Locale-independent CSV output. Doubles use the shortest form at 17 significant digits.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

namespace skipfree {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  template <typename... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((put(cells, first), first = false), ...);
    out_ << '\n';
  }

 private:
  template <typename T>
  void put(const T& cell, bool first) {
    if (!first) out_ << ',';
    if constexpr (std::is_same_v<T, bool>) {
      out_ << (cell ? "true" : "false");
    } else if constexpr (std::is_floating_point_v<T>) {
      out_ << format_double(static_cast<double>(cell));
    } else if constexpr (std::is_integral_v<T>) {
      char buf[32];
      const auto r = std::to_chars(buf, buf + sizeof buf, cell);
      out_ << std::string_view(buf, r.ptr);
    } else {
      out_ << std::string_view(cell);
    }
  }

  std::ostream& out_;
};

}  // namespace skipfree
