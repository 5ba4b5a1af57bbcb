#include "tweetscope/date.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace tweetscope {

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    const char* first = s.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::optional<Date> make_date(int y, int m, int d) {
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

std::optional<Timestamp> make_timestamp(Date day, int hh, int mm, int ss, int offset_minutes) {
    if (hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 || ss > 60) return std::nullopt;
    using namespace std::chrono;
    return Timestamp{day} + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_minutes};
}

// "+0000", "+00:00", "Z"; returns false on garbage.
bool parse_offset(std::string_view s, int& minutes) {
    minutes = 0;
    if (s.empty() || s == "Z" || s == "z") return true;
    if (s[0] != '+' && s[0] != '-') return false;
    const int sign = s[0] == '-' ? -1 : 1;
    int h = 0;
    int m = 0;
    if (s.size() == 5) {
        if (!read_int(s, 1, 2, h) || !read_int(s, 3, 2, m)) return false;
    } else if (s.size() == 6 && s[3] == ':') {
        if (!read_int(s, 1, 2, h) || !read_int(s, 4, 2, m)) return false;
    } else {
        return false;
    }
    minutes = sign * (h * 60 + m);
    return true;
}

std::optional<Timestamp> parse_archive_form(std::string_view s) {
    // Wed Mar 11 20:00:00 +0000 2020
    static constexpr std::array<std::string_view, 12> months{
        "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    if (s.size() != 30 || s[3] != ' ' || s[7] != ' ' || s[10] != ' ' || s[19] != ' ' || s[25] != ' ')
        return std::nullopt;
    int month = 0;
    for (std::size_t i = 0; i < months.size(); ++i)
        if (s.substr(4, 3) == months[i]) month = static_cast<int>(i) + 1;
    int day = 0, hh = 0, mm = 0, ss = 0, year = 0, offset = 0;
    if (month == 0 || !read_int(s, 8, 2, day) || !read_int(s, 11, 2, hh) || !read_int(s, 14, 2, mm) ||
        !read_int(s, 17, 2, ss) || !read_int(s, 26, 4, year) || s[13] != ':' || s[16] != ':')
        return std::nullopt;
    if (!parse_offset(s.substr(20, 5), offset)) return std::nullopt;
    auto date = make_date(year, month, day);
    if (!date) return std::nullopt;
    return make_timestamp(*date, hh, mm, ss, offset);
}

std::optional<Timestamp> parse_iso_form(std::string_view s) {
    if (s.size() < 19) return std::nullopt;
    auto date = parse_iso_date(s.substr(0, 10));
    if (!date || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' || s[16] != ':') return std::nullopt;
    int hh = 0, mm = 0, ss = 0;
    if (!read_int(s, 11, 2, hh) || !read_int(s, 14, 2, mm) || !read_int(s, 17, 2, ss)) return std::nullopt;
    std::string_view rest = s.substr(19);
    if (!rest.empty() && rest[0] == '.') {
        std::size_t i = 1;
        while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
        rest.remove_prefix(i);
    }
    int offset = 0;
    if (!parse_offset(rest, offset)) return std::nullopt;
    return make_timestamp(*date, hh, mm, ss, offset);
}

}  // namespace

std::optional<Date> parse_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (!read_int(s, 0, 4, y) || !read_int(s, 5, 2, m) || !read_int(s, 8, 2, d)) return std::nullopt;
    return make_date(y, m, d);
}

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
    if (auto t = parse_archive_form(s)) return t;
    return parse_iso_form(s);
}

std::string format_timestamp(Timestamp t) {
    const Date day = utc_day(t);
    const auto secs = (t - Timestamp{day}).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02lld:%02lld:%02lldZ", format_date(day).c_str(),
                  static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                  static_cast<long long>(secs % 60));
    return buf;
}

}  // namespace tweetscope
