#pragma once

#include <string>
#include <string_view>

namespace dqap {

// Shortest-round-trip is not used on purpose: every real is written with
// exactly 17 significant digits so files diff cleanly across runs.
std::string format_real(double value);

// Locale-independent parse of a full token; throws InvalidArgument on junk.
double parse_real(std::string_view text);
long long parse_integer(std::string_view text);

}  // namespace dqap
