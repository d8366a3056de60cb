#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace maskshare::util {

// Round-trip safe double formatting (%.17g); identical bytes for identical values.
std::string fmt_double(double v);

// Compact formatting for human-facing tables (%.10g).
std::string fmt_double_short(double v);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

std::vector<int> parse_int_list(std::string_view s, char sep = ',');
std::vector<std::uint64_t> parse_u64_list(std::string_view s, char sep = ',');

double parse_double(std::string_view s);
long long parse_ll(std::string_view s);

}  // namespace maskshare::util
