#include "tweetscope/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "tweetscope/error.hpp"
#include "tweetscope/util.hpp"

namespace tweetscope::timeseries {

const std::vector<Value>& DailySeries::series(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw ConfigError("no series named '" + name + "'");
    return it->second;
}

namespace {

std::vector<Date> day_axis(Date first, Date last) {
    std::vector<Date> axis;
    for (Date d = first; d <= last; d += std::chrono::days{1}) axis.push_back(d);
    return axis;
}

std::size_t day_index(const std::vector<Date>& axis, Date d) {
    return static_cast<std::size_t>((d - axis.front()).count());
}

}  // namespace

DailySeries bucket_daily(const std::vector<ingest::TweetRecord>& records) {
    DailySeries s;
    if (records.empty()) return s;
    auto [lo, hi] = std::minmax_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return a.created_at < b.created_at;
    });
    s.dates = day_axis(utc_day(lo->created_at), utc_day(hi->created_at));
    for (auto kind : ingest::kAllKinds) s.values[std::string(ingest::to_string(kind))].assign(s.dates.size(), 0.0);
    for (const auto& r : records) {
        auto& v = s.values[std::string(ingest::to_string(r.kind))][day_index(s.dates, utc_day(r.created_at))];
        v = *v + 1.0;
    }
    return s;
}

DailySeries case_series(const std::vector<ingest::CaseCountRow>& rows) {
    DailySeries s;
    if (rows.empty()) return s;
    auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return a.date < b.date;
    });
    s.dates = day_axis(lo->date, hi->date);
    for (const char* name : {"confirmed", "deaths", "recovered"}) s.values[name].assign(s.dates.size(), std::nullopt);
    for (const auto& r : rows) {
        const auto i = day_index(s.dates, r.date);
        s.values["confirmed"][i] = static_cast<double>(r.confirmed);
        s.values["deaths"][i] = static_cast<double>(r.deaths);
        s.values["recovered"][i] = static_cast<double>(r.recovered);
    }
    return s;
}

AlignedPair align(const DailySeries& series_a, const std::string& name_a, const DailySeries& series_b,
                  const std::string& name_b, const DateWindow& window) {
    if (series_a.empty() || series_b.empty()) throw ConfigError("align: both series must be non-empty");
    const auto& va = series_a.series(name_a);
    const auto& vb = series_b.series(name_b);
    Date first = std::max(series_a.dates.front(), series_b.dates.front());
    Date last = std::min(series_a.dates.back(), series_b.dates.back());
    if (window.first) first = std::max(first, *window.first);
    if (window.last) last = std::min(last, *window.last);
    if (first > last)
        throw ConfigError("align: no overlap between " + name_a + " [" + format_date(series_a.dates.front()) + ", " +
                          format_date(series_a.dates.back()) + "] and " + name_b + " [" +
                          format_date(series_b.dates.front()) + ", " + format_date(series_b.dates.back()) + "]");
    AlignedPair pair{name_a, name_b, {}, {}, {}, {first, last}};
    for (Date d = first; d <= last; d += std::chrono::days{1}) {
        const auto& x = va[day_index(series_a.dates, d)];
        const auto& y = vb[day_index(series_b.dates, d)];
        if (!x || !y) continue;
        pair.dates.push_back(d);
        pair.a.push_back(*x);
        pair.b.push_back(*y);
    }
    return pair;
}

std::optional<double> pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ConfigError("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport pearson(const AlignedPair& pair) {
    CorrelationReport r{pair.name_a, pair.name_b, std::nullopt, pair.a.size(), pair.window, {}};
    if (r.n_overlap < 3) {
        r.note = "fewer than 3 overlapping days";
        return r;
    }
    r.pearson_r = pearson_r(pair.a, pair.b);
    if (!r.pearson_r) r.note = "constant series";
    return r;
}

void write_tidy_csv(std::ostream& out, const std::vector<const DailySeries*>& series) {
    out << "date,series,value\n";
    for (const auto* s : series)
        for (const auto& [name, values] : s->values)
            for (std::size_t i = 0; i < s->dates.size(); ++i)
                out << format_date(s->dates[i]) << ',' << name << ','
                    << (values[i] ? format_double(*values[i]) : std::string{}) << '\n';
}

nlohmann::json to_json(const CorrelationReport& report) {
    nlohmann::json j{{"series_a", report.series_a},
                     {"series_b", report.series_b},
                     {"pearson_r", report.pearson_r ? nlohmann::json(*report.pearson_r) : nlohmann::json(nullptr)},
                     {"n_overlap", report.n_overlap},
                     {"window", {format_date(report.window.first), format_date(report.window.second)}}};
    if (!report.note.empty()) j["note"] = report.note;
    return j;
}

}  // namespace tweetscope::timeseries
