#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sentinel::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_line(std::string_view line);

/// Quotes the field if it contains a comma, quote or newline.
std::string escape(std::string_view field);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

double parse_double(std::string_view s);
long long parse_int(std::string_view s);

} // namespace sentinel::csv
