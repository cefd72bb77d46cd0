#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace geoload {

/// Hour-resolution UTC timestamp.
using Timestamp = std::chrono::sys_time<std::chrono::hours>;

/// Accepts `YYYY-MM-DDTHH:MM[:SS][Z]` (a space may replace the `T`).
/// Minutes and seconds must be zero. Throws a parse error otherwise.
Timestamp parse_timestamp(std::string_view text);

/// `YYYY-MM-DDTHH:00:00Z`
std::string format_timestamp(Timestamp t);

int hour_of_day(Timestamp t);
/// 0 = Monday ... 6 = Sunday.
int weekday(Timestamp t);
/// 0 = January ... 11 = December.
int month_index(Timestamp t);
/// Day of year, 0-based.
int day_of_year(Timestamp t);

}  // namespace geoload
