#pragma once

#include "sentinel/common.hpp"
#include "sentinel/lexicon.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sentinel {

struct QueryRecord {
    std::string user_id;
    Date date;
    int day = 0;  // index into the study calendar
    std::string state;
    std::string text;
};

struct RecallRecord {
    std::string drug;  // normalized canonical name
    Date initiation_date;
    int day = 0;  // may exceed the study length; never negative
    std::vector<std::string> states;  // sorted, non-empty
    bool nationwide = false;
    RecallClass classification = RecallClass::II;
    RxOtc rx_otc = RxOtc::Unclassified;
};

/// JSONL rows {"user_id","date","state","text"}. Rows with bad JSON, missing fields, an
/// invalid date, a date outside the study window or an unknown state become RowErrors.
/// Throws ParseError if the stream itself is unreadable.
ParseResult<QueryRecord> parse_query_log(std::istream& in, const StudyCalendar& calendar);
void write_query_log(std::ostream& out, std::span<const QueryRecord> records);

/// JSONL rows {"drug","initiation_date","distribution","classification"[,"rx_otc"]}.
/// "nationwide" expands to the calendar's state universe. A (drug, date, state) triple
/// seen earlier in the file is dropped from later rows; rows left with no state vanish.
ParseResult<RecallRecord> parse_recall_file(std::istream& in, const StudyCalendar& calendar);
void write_recall_file(std::ostream& out, std::span<const RecallRecord> recalls);

using SeriesKey = std::pair<std::string, std::string>;  // (drug, state)

/// Earliest recall day per (drug, state).
std::map<SeriesKey, int> first_recall_days(std::span<const RecallRecord> recalls);

/// Daily (total, symptom) query counts per (drug, state). Cells not stored are zero.
class CountCube {
public:
    struct Series {
        std::vector<std::uint32_t> total;
        std::vector<std::uint32_t> symptom;
        bool operator==(const Series&) const = default;
    };
    struct Cell {
        std::uint32_t total = 0;
        std::uint32_t symptom = 0;
        bool operator==(const Cell&) const = default;
    };

    CountCube() = default;
    CountCube(int n_days, std::vector<std::string> states);

    int n_days() const { return n_days_; }
    const std::vector<std::string>& states() const { return states_; }

    /// Adds `total` queries of which `symptom` mention a symptom. Throws ValidationError
    /// if symptom > total, the day is out of range or the state is unknown.
    void add(const std::string& drug, const std::string& state, int day, std::uint32_t total,
             std::uint32_t symptom);

    Cell at(const std::string& drug, const std::string& state, int day) const;
    const Series* series(const std::string& drug, const std::string& state) const;
    const std::map<SeriesKey, Series>& all_series() const { return series_; }

    /// Drugs with at least one stored series, sorted.
    std::vector<std::string> drugs() const;
    std::uint64_t drug_total(const std::string& drug) const;

    void set_rx_otc(const std::string& drug, RxOtc v) { rx_otc_[drug] = v; }
    RxOtc rx_otc(const std::string& drug) const;

    /// Cellwise sum; both cubes must share the calendar.
    CountCube& operator+=(const CountCube& other);
    bool operator==(const CountCube& other) const;

private:
    int n_days_ = 0;
    std::vector<std::string> states_;
    std::map<SeriesKey, Series> series_;
    std::map<std::string, RxOtc> rx_otc_;
};

CountCube build_count_cube(std::span<const QueryRecord> records, const DrugLexicon& drugs,
                           const SymptomLexicon& symptoms, const StudyCalendar& calendar);

/// Keeps drugs whose all-state, all-day total is at least min_queries.
CountCube filter_drugs(const CountCube& cube, std::uint64_t min_queries = 1000);

/// Sparse CSV `drug,state,day,total_count,symptom_count`, zero cells omitted,
/// rows in (drug, state, day) order.
void write_cube_csv(std::ostream& out, const CountCube& cube);
CountCube read_cube_csv(std::istream& in, const StudyCalendar& calendar,
                        const DrugLexicon* lexicon = nullptr);

/// Per-state count of recalls that were not nationwide, in calendar state order.
std::vector<std::pair<std::string, std::size_t>> recalls_per_state(
    std::span<const RecallRecord> recalls, const StudyCalendar& calendar);

} // namespace sentinel
