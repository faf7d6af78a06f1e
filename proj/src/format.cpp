#include "dqap/format.hpp"

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

#include "dqap/error.hpp"

namespace dqap {

std::string format_real(double value) {
  if (value == 0.0) value = 0.0;  // fold -0 into 0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last)
    throw InvalidArgument("not a real number: '" + std::string(text) + "'");
  return value;
}

long long parse_integer(std::string_view text) {
  long long value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw InvalidArgument("not an integer: '" + std::string(text) + "'");
  return value;
}

}  // namespace dqap
