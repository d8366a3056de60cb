#include "maskshare/util/text.hpp"

#include <cstdio>
#include <cstdlib>

#include "maskshare/util/errors.hpp"

namespace maskshare::util {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_double_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string trim(std::string_view s) {
  const char* ws = " \t\r\n";
  const std::size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return "";
  const std::size_t e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view s) {
  const std::string t = trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0') {
    throw ConfigError("not a number: '" + t + "'");
  }
  return v;
}

long long parse_ll(std::string_view s) {
  const std::string t = trim(s);
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (end == t.c_str() || *end != '\0') {
    throw ConfigError("not an integer: '" + t + "'");
  }
  return v;
}

std::vector<int> parse_int_list(std::string_view s, char sep) {
  std::vector<int> out;
  for (const auto& piece : split(s, sep)) {
    if (trim(piece).empty()) continue;
    out.push_back(static_cast<int>(parse_ll(piece)));
  }
  return out;
}

std::vector<std::uint64_t> parse_u64_list(std::string_view s, char sep) {
  std::vector<std::uint64_t> out;
  for (const auto& piece : split(s, sep)) {
    if (trim(piece).empty()) continue;
    out.push_back(static_cast<std::uint64_t>(parse_ll(piece)));
  }
  return out;
}

}  // namespace maskshare::util
