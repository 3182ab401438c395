#include "sentinel/common.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace sentinel {

std::string_view to_string(RxOtc v) {
    switch (v) {
    case RxOtc::RX: return "RX";
    case RxOtc::OTC: return "OTC";
    case RxOtc::Unclassified: return "UNCLASSIFIED";
    }
    return "UNCLASSIFIED";
}

std::string_view to_string(RecallClass v) {
    switch (v) {
    case RecallClass::I: return "I";
    case RecallClass::II: return "II";
    case RecallClass::III: return "III";
    }
    return "I";
}

std::optional<RxOtc> parse_rx_otc(std::string_view s) {
    if (s == "RX") return RxOtc::RX;
    if (s == "OTC") return RxOtc::OTC;
    if (s == "UNCLASSIFIED") return RxOtc::Unclassified;
    return std::nullopt;
}

std::optional<RecallClass> parse_recall_class(std::string_view s) {
    if (s == "I") return RecallClass::I;
    if (s == "II") return RecallClass::II;
    if (s == "III") return RecallClass::III;
    return std::nullopt;
}

namespace {

bool parse_digits(std::string_view s, int& out) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

} // namespace

std::optional<Date> parse_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (!parse_digits(s.substr(0, 4), y) || !parse_digits(s.substr(5, 2), m) ||
        !parse_digits(s.substr(8, 2), d))
        return std::nullopt;
    Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
              std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

std::string format_iso_date(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

const std::vector<std::string>& us_states() {
    static const std::vector<std::string> states = {
        "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DE", "FL", "GA", "HI", "IA", "ID",
        "IL", "IN", "KS", "KY", "LA", "MA", "MD", "ME", "MI", "MN", "MO", "MS", "MT",
        "NC", "ND", "NE", "NH", "NJ", "NM", "NV", "NY", "OH", "OK", "OR", "PA", "RI",
        "SC", "SD", "TN", "TX", "UT", "VA", "VT", "WA", "WI", "WV", "WY"};
    return states;
}

int StudyCalendar::day_index(Date d) const {
    using std::chrono::sys_days;
    return static_cast<int>((sys_days{d} - sys_days{start}).count());
}

Date StudyCalendar::date_at(int day) const {
    return Date{std::chrono::sys_days{start} + std::chrono::days{day}};
}

bool StudyCalendar::has_state(std::string_view code) const {
    return std::find(states.begin(), states.end(), code) != states.end();
}

void StudyCalendar::validate() const {
    if (!start.ok()) throw ValidationError("study start date is not a valid calendar date");
    if (n_days <= 0) throw ValidationError("study length must be positive");
    if (states.empty()) throw ValidationError("state universe is empty");
    auto sorted = states;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ValidationError("state universe contains duplicates");
}

} // namespace sentinel
