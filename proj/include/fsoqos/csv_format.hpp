#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fsoqos::csv {

// Fixed notation with six decimals.
std::string fixed6(double v);

// Shortest decimal form that parses back to the same double.
std::string exact(double v);

// Full-string parse; returns false on trailing garbage or out-of-range.
bool parse_double(std::string_view text, double& out);

std::vector<std::string_view> split_fields(std::string_view line);

} // namespace fsoqos::csv
