#pragma once

#include <string>

namespace polsynth {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

/// `value` scaled into display units, formatted for people and programs.
std::string format_display(double value, double scale);

}  // namespace polsynth
