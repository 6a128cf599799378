#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pairsim::textio {

// Shortest decimal representation that parses back to the same double.
// Whole values print without a trailing ".0" ("60", not "60.0").
std::string format_double(double v);

// Strict full-string numeric parses; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);
std::optional<std::uint64_t> parse_uint(std::string_view s);

std::string_view trim(std::string_view s);

// Splits on every separator; fields are not trimmed. "a,,b" -> {"a","","b"}.
std::vector<std::string_view> split(std::string_view s, char sep);

// FNV-1a, 64-bit. Stable across platforms; used for config digests.
std::uint64_t fnv1a64(std::string_view s);

}  // namespace pairsim::textio
