#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace taildep {

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] std::string format_double(double x);
/// Strict parse of a full field; throws std::invalid_argument on junk.
[[nodiscard]] double parse_double(std::string_view text);
[[nodiscard]] long long parse_int(std::string_view text);

/// Splits one CSV line on commas. Quoted fields are not supported; none of
/// the formats read here produce them.
[[nodiscard]] std::vector<std::string_view> split_csv_line(std::string_view line);
[[nodiscard]] std::string_view trim(std::string_view s) noexcept;

}  // namespace taildep
