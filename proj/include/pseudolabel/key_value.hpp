#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pseudolabel {

/// `key = value` lines; '#' starts a comment; keys may repeat. Throws
/// ParseError on a non-blank line without '='.
using KeyValueList = std::vector<std::pair<std::string, std::string>>;
KeyValueList parse_key_values(std::string_view text);

std::vector<double> parse_number_list(std::string_view text);
double parse_number(std::string_view text);
/// Exact unsigned 64-bit integer (seeds do not survive a round trip through double).
std::uint64_t parse_uint(std::string_view text);
bool parse_bool(std::string_view text);

/// Shortest text that parses back to the same double.
std::string format_number(double v);

}  // namespace pseudolabel
