#include "polsynth/format.hpp"

#include <array>
#include <charconv>

namespace polsynth {

std::string format_number(double value) {
  std::array<char, 64> buffer{};
  const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), result.ptr);
}

std::string format_display(double value, double scale) { return format_number(value * scale); }

}  // namespace polsynth
