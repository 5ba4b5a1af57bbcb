#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace tweetscope {

// Calendar day in UTC.
using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

// "YYYY-MM-DD".
std::optional<Date> parse_iso_date(std::string_view s);
std::string format_date(Date d);

// Accepts the archive form "Wed Mar 11 20:00:00 +0000 2020" and ISO-8601
// "2020-03-11T20:00:00Z" / "2020-03-11 20:00:00" (offset optional).
std::optional<Timestamp> parse_timestamp(std::string_view s);
std::string format_timestamp(Timestamp t);

inline Date utc_day(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

}  // namespace tweetscope
