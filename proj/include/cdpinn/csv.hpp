#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cdpinn {

/// Shortest round-trip decimal form ('.' separator); infinities as "inf"/"-inf".
std::string format_double(double v);

/// Inverse of format_double (also accepts "nan").
double parse_double(std::string_view s);

/// Quote a field per RFC 4180 when it contains a comma, quote or line break.
std::string csv_field(std::string_view s);

/// Split one RFC 4180 record (no embedded line breaks).
std::vector<std::string> split_csv_line(std::string_view line);

} // namespace cdpinn
