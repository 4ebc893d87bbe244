#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace rvd {

using Date = std::chrono::sys_days;

/// Parses a strict YYYY-MM-DD Gregorian calendar date.
std::optional<Date> parse_iso_date(std::string_view text);
std::string format_iso_date(Date d);

}  // namespace rvd
