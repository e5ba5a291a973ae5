#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace deglab {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

/// Strict parse of a full field; throws format error on junk.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char sep);

/// 64-bit FNV-1a, used to fingerprint configurations.
std::uint64_t fnv1a(std::string_view bytes) noexcept;

}  // namespace deglab
