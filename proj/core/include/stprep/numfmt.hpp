#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace stprep {

// Locale-independent number formatting/parsing ('.' decimal point always).

// Fixed-point with the given number of decimals, e.g. format_fixed(1.5, 3)
// == "1.500".
std::string format_fixed(double value, int decimals);

// Shortest representation that parses back to the identical double.
std::string format_double(double value);

// Full-string parse; nullopt on trailing garbage, empty input or overflow.
std::optional<double> parse_double(std::string_view text);

}  // namespace stprep
