#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sentinel {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input that a caller can point at (file, line, field).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Precondition violated by an argument or configuration value.
class ValidationError : public Error {
public:
    using Error::Error;
};

struct RowError {
    std::size_t line = 0;  // 1-based
    std::string reason;
};

template <class T>
struct ParseResult {
    std::vector<T> records;
    std::vector<RowError> errors;
};

enum class RxOtc { RX, OTC, Unclassified };
enum class RecallClass { I, II, III };

std::string_view to_string(RxOtc v);
std::string_view to_string(RecallClass v);
std::optional<RxOtc> parse_rx_otc(std::string_view s);
std::optional<RecallClass> parse_recall_class(std::string_view s);

using Date = std::chrono::year_month_day;

/// Strict YYYY-MM-DD; rejects impossible dates such as 2015-13-02 or 2015-02-30.
std::optional<Date> parse_iso_date(std::string_view s);
std::string format_iso_date(Date d);

/// The 50 US state postal codes in alphabetical order.
const std::vector<std::string>& us_states();

/// Study window: day index 0 is `start`, valid days are [0, n_days).
struct StudyCalendar {
    Date start{std::chrono::year{2015}, std::chrono::month{1}, std::chrono::day{1}};
    int n_days = 365;
    std::vector<std::string> states = us_states();

    int day_index(Date d) const;
    Date date_at(int day) const;
    bool contains_day(int day) const { return day >= 0 && day < n_days; }
    bool has_state(std::string_view code) const;
    void validate() const;
};

} // namespace sentinel
