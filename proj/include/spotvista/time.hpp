#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace spotvista {

// All timestamps are UTC with second resolution. The simulator's virtual
// clock and the store share this representation.
using Timestamp = std::chrono::sys_seconds;
using Minutes = std::chrono::minutes;

inline constexpr Minutes kDay{24 * 60};
inline constexpr Minutes kWeek{7 * 24 * 60};

// "2025-08-04T13:10:00Z"
std::string format_rfc3339(Timestamp ts);

// Accepts "YYYY-MM-DDTHH:MM:SS" followed by "Z" or "+HH:MM"/"-HH:MM", with
// optional fractional seconds (truncated). Throws InvalidArgument.
Timestamp parse_rfc3339(std::string_view text);

Timestamp make_timestamp(int year, unsigned month, unsigned day,
                         unsigned hour = 0, unsigned minute = 0,
                         unsigned second = 0);

double to_hours(std::chrono::seconds d);

}  // namespace spotvista
