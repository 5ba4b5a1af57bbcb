#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tweetscope/date.hpp"
#include "tweetscope/ingest.hpp"

namespace tweetscope::timeseries {

using Value = std::optional<double>;

// Gap-free daily axis; missing observations are explicit nullopt.
struct DailySeries {
    std::vector<Date> dates;
    std::map<std::string, std::vector<Value>> values;

    bool empty() const { return dates.empty(); }
    const std::vector<Value>& series(const std::string& name) const;
};

// Tweets per UTC day per kind; interior days without tweets are 0.
DailySeries bucket_daily(const std::vector<ingest::TweetRecord>& records);

// confirmed / deaths / recovered; unreported days are null.
DailySeries case_series(const std::vector<ingest::CaseCountRow>& rows);

struct DateWindow {
    std::optional<Date> first;
    std::optional<Date> last;
};

struct AlignedPair {
    std::string name_a;
    std::string name_b;
    std::vector<Date> dates;
    std::vector<double> a;
    std::vector<double> b;
    std::pair<Date, Date> window{};
};

// Restricts to the window intersected with both date ranges and drops days
// where either value is null. Throws ConfigError on an empty intersection.
AlignedPair align(const DailySeries& series_a, const std::string& name_a, const DailySeries& series_b,
                  const std::string& name_b, const DateWindow& window = {});

struct CorrelationReport {
    std::string series_a;
    std::string series_b;
    std::optional<double> pearson_r;  // nullopt: fewer than 3 points or a constant series
    std::size_t n_overlap = 0;
    std::pair<Date, Date> window{};
    std::string note;
};

CorrelationReport pearson(const AlignedPair& pair);
std::optional<double> pearson_r(const std::vector<double>& x, const std::vector<double>& y);

// Tidy CSV: date,series,value (empty value for null).
void write_tidy_csv(std::ostream& out, const std::vector<const DailySeries*>& series);
nlohmann::json to_json(const CorrelationReport& report);

}  // namespace tweetscope::timeseries
