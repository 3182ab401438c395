#include "sentinel/ingest.hpp"

#include "sentinel/csv.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

namespace sentinel {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

const json* string_field(const json& row, const char* name, std::string& reason) {
    auto it = row.find(name);
    if (it == row.end()) {
        reason = std::string("missing field '") + name + "'";
        return nullptr;
    }
    if (!it->is_string()) {
        reason = std::string("field '") + name + "' must be a string";
        return nullptr;
    }
    return &*it;
}

void require_readable(std::istream& in, const char* what) {
    if (!in.good() && !in.eof()) throw ParseError(std::string(what) + ": stream is not readable");
}

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

} // namespace

ParseResult<QueryRecord> parse_query_log(std::istream& in, const StudyCalendar& calendar) {
    require_readable(in, "query log");
    ParseResult<QueryRecord> result;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        auto fail = [&](std::string reason) { result.errors.push_back({lineno, std::move(reason)}); };
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            fail("not a JSON object");
            continue;
        }
        std::string reason;
        const json* user = string_field(row, "user_id", reason);
        const json* date = user ? string_field(row, "date", reason) : nullptr;
        const json* state = date ? string_field(row, "state", reason) : nullptr;
        const json* text = state ? string_field(row, "text", reason) : nullptr;
        if (!text) {
            fail(reason);
            continue;
        }
        auto d = parse_iso_date(date->get_ref<const std::string&>());
        if (!d) {
            fail("invalid date '" + date->get<std::string>() + "'");
            continue;
        }
        int day = calendar.day_index(*d);
        if (!calendar.contains_day(day)) {
            fail("date " + format_iso_date(*d) + " outside the study window");
            continue;
        }
        const auto& code = state->get_ref<const std::string&>();
        if (code.size() != 2 || !calendar.has_state(code)) {
            fail("unknown state '" + code + "'");
            continue;
        }
        result.records.push_back({user->get<std::string>(), *d, day, code, text->get<std::string>()});
    }
    if (in.bad()) throw ParseError("query log: read failure after line " + std::to_string(lineno));
    return result;
}

void write_query_log(std::ostream& out, std::span<const QueryRecord> records) {
    for (const auto& r : records) {
        ordered_json row;
        row["user_id"] = r.user_id;
        row["date"] = format_iso_date(r.date);
        row["state"] = r.state;
        row["text"] = r.text;
        out << row.dump() << '\n';
    }
}

ParseResult<RecallRecord> parse_recall_file(std::istream& in, const StudyCalendar& calendar) {
    require_readable(in, "recall file");
    ParseResult<RecallRecord> result;
    std::set<std::tuple<std::string, int, std::string>> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        auto fail = [&](std::string reason) { result.errors.push_back({lineno, std::move(reason)}); };
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            fail("not a JSON object");
            continue;
        }
        std::string reason;
        const json* drug = string_field(row, "drug", reason);
        const json* date = drug ? string_field(row, "initiation_date", reason) : nullptr;
        const json* cls = date ? string_field(row, "classification", reason) : nullptr;
        if (!cls) {
            fail(reason);
            continue;
        }
        RecallRecord rec;
        rec.drug = normalize_text(drug->get_ref<const std::string&>());
        if (rec.drug.empty()) {
            fail("empty drug name");
            continue;
        }
        auto d = parse_iso_date(date->get_ref<const std::string&>());
        if (!d) {
            fail("invalid initiation_date '" + date->get<std::string>() + "'");
            continue;
        }
        rec.initiation_date = *d;
        rec.day = calendar.day_index(*d);
        if (rec.day < 0) {
            fail("initiation_date " + format_iso_date(*d) + " precedes the study window");
            continue;
        }
        auto c = parse_recall_class(cls->get_ref<const std::string&>());
        if (!c) {
            fail("classification must be I, II or III, got '" + cls->get<std::string>() + "'");
            continue;
        }
        rec.classification = *c;
        if (auto it = row.find("rx_otc"); it != row.end() && !it->is_null()) {
            auto rx = it->is_string() ? parse_rx_otc(it->get_ref<const std::string&>()) : std::nullopt;
            if (!rx) {
                fail("rx_otc must be RX, OTC or UNCLASSIFIED");
                continue;
            }
            rec.rx_otc = *rx;
        }
        auto dist = row.find("distribution");
        if (dist == row.end()) {
            fail("missing field 'distribution'");
            continue;
        }
        if (dist->is_string()) {
            if (normalize_text(dist->get_ref<const std::string&>()) != "nationwide") {
                fail("distribution must be \"nationwide\" or a list of state codes");
                continue;
            }
            rec.nationwide = true;
            rec.states = calendar.states;
        } else if (dist->is_array()) {
            bool ok = true;
            for (const auto& s : *dist) {
                if (!s.is_string() || !calendar.has_state(s.get_ref<const std::string&>())) {
                    fail("unknown state code " + s.dump());
                    ok = false;
                    break;
                }
                rec.states.push_back(s.get<std::string>());
            }
            if (!ok) continue;
        } else {
            fail("distribution must be \"nationwide\" or a list of state codes");
            continue;
        }
        std::sort(rec.states.begin(), rec.states.end());
        rec.states.erase(std::unique(rec.states.begin(), rec.states.end()), rec.states.end());
        std::erase_if(rec.states, [&](const std::string& s) {
            return !seen.emplace(rec.drug, rec.day, s).second;
        });
        if (rec.states.empty()) {
            if (dist->is_array() && dist->empty()) fail("distribution lists no states");
            continue;
        }
        rec.nationwide = rec.nationwide && rec.states.size() == calendar.states.size();
        result.records.push_back(std::move(rec));
    }
    if (in.bad()) throw ParseError("recall file: read failure after line " + std::to_string(lineno));
    return result;
}

void write_recall_file(std::ostream& out, std::span<const RecallRecord> recalls) {
    for (const auto& r : recalls) {
        ordered_json row;
        row["drug"] = r.drug;
        row["initiation_date"] = format_iso_date(r.initiation_date);
        if (r.nationwide)
            row["distribution"] = "nationwide";
        else
            row["distribution"] = r.states;
        row["classification"] = std::string(to_string(r.classification));
        row["rx_otc"] = std::string(to_string(r.rx_otc));
        out << row.dump() << '\n';
    }
}

std::map<SeriesKey, int> first_recall_days(std::span<const RecallRecord> recalls) {
    std::map<SeriesKey, int> first;
    for (const auto& r : recalls)
        for (const auto& s : r.states) {
            auto [it, inserted] = first.try_emplace({r.drug, s}, r.day);
            if (!inserted) it->second = std::min(it->second, r.day);
        }
    return first;
}

CountCube::CountCube(int n_days, std::vector<std::string> states)
    : n_days_(n_days), states_(std::move(states)) {
    if (n_days_ <= 0) throw ValidationError("count cube needs a positive number of days");
}

void CountCube::add(const std::string& drug, const std::string& state, int day, std::uint32_t total,
                    std::uint32_t symptom) {
    if (symptom > total) throw ValidationError("symptom count exceeds total count");
    if (day < 0 || day >= n_days_) throw ValidationError("day " + std::to_string(day) + " out of range");
    if (std::find(states_.begin(), states_.end(), state) == states_.end())
        throw ValidationError("unknown state '" + state + "'");
    auto [it, inserted] = series_.try_emplace({drug, state});
    if (inserted) {
        it->second.total.assign(n_days_, 0);
        it->second.symptom.assign(n_days_, 0);
        rx_otc_.try_emplace(drug, RxOtc::Unclassified);
    }
    it->second.total[day] += total;
    it->second.symptom[day] += symptom;
}

CountCube::Cell CountCube::at(const std::string& drug, const std::string& state, int day) const {
    auto* s = series(drug, state);
    if (!s || day < 0 || day >= n_days_) return {};
    return {s->total[day], s->symptom[day]};
}

const CountCube::Series* CountCube::series(const std::string& drug, const std::string& state) const {
    auto it = series_.find({drug, state});
    return it == series_.end() ? nullptr : &it->second;
}

std::vector<std::string> CountCube::drugs() const {
    std::vector<std::string> out;
    for (const auto& [key, s] : series_)
        if (out.empty() || out.back() != key.first) out.push_back(key.first);
    return out;
}

std::uint64_t CountCube::drug_total(const std::string& drug) const {
    std::uint64_t sum = 0;
    for (auto it = series_.lower_bound({drug, ""}); it != series_.end() && it->first.first == drug; ++it)
        for (auto v : it->second.total) sum += v;
    return sum;
}

RxOtc CountCube::rx_otc(const std::string& drug) const {
    auto it = rx_otc_.find(drug);
    return it == rx_otc_.end() ? RxOtc::Unclassified : it->second;
}

CountCube& CountCube::operator+=(const CountCube& other) {
    if (other.n_days_ != n_days_ || other.states_ != states_)
        throw ValidationError("cannot add cubes over different calendars");
    for (const auto& [key, s] : other.series_) {
        auto [it, inserted] = series_.try_emplace(key);
        if (inserted) {
            it->second = s;
            continue;
        }
        for (int d = 0; d < n_days_; ++d) {
            it->second.total[d] += s.total[d];
            it->second.symptom[d] += s.symptom[d];
        }
    }
    for (const auto& [drug, v] : other.rx_otc_) rx_otc_.try_emplace(drug, v);
    return *this;
}

bool CountCube::operator==(const CountCube& other) const {
    return n_days_ == other.n_days_ && states_ == other.states_ && series_ == other.series_;
}

CountCube build_count_cube(std::span<const QueryRecord> records, const DrugLexicon& drugs,
                           const SymptomLexicon& symptoms, const StudyCalendar& calendar) {
    CountCube cube(calendar.n_days, calendar.states);
    for (const auto& r : records) {
        auto text = normalize_text(r.text);
        auto ids = drugs.match_ids(text);
        if (ids.empty()) continue;
        std::uint32_t sym = contains_symptom(text, symptoms) ? 1 : 0;
        for (auto id : ids) {
            const auto& entry = drugs.entries()[id];
            cube.add(entry.canonical_name, r.state, r.day, 1, sym);
            cube.set_rx_otc(entry.canonical_name, entry.rx_otc);
        }
    }
    return cube;
}

CountCube filter_drugs(const CountCube& cube, std::uint64_t min_queries) {
    if (min_queries == 0) return cube;
    CountCube out(cube.n_days(), cube.states());
    for (const auto& drug : cube.drugs()) {
        if (cube.drug_total(drug) < min_queries) continue;
        for (const auto& state : cube.states()) {
            const auto* s = cube.series(drug, state);
            if (!s) continue;
            for (int d = 0; d < cube.n_days(); ++d)
                if (s->total[d] > 0) out.add(drug, state, d, s->total[d], s->symptom[d]);
        }
        out.set_rx_otc(drug, cube.rx_otc(drug));
    }
    return out;
}

void write_cube_csv(std::ostream& out, const CountCube& cube) {
    out << "drug,state,day,total_count,symptom_count\n";
    for (const auto& [key, s] : cube.all_series())
        for (int d = 0; d < cube.n_days(); ++d)
            if (s.total[d] > 0 || s.symptom[d] > 0)
                out << csv::escape(key.first) << ',' << key.second << ',' << d << ',' << s.total[d] << ','
                    << s.symptom[d] << '\n';
}

CountCube read_cube_csv(std::istream& in, const StudyCalendar& calendar, const DrugLexicon* lexicon) {
    require_readable(in, "count cube");
    CountCube cube(calendar.n_days, calendar.states);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("count cube: missing header");
    ++lineno;
    if (csv::split_line(line) !=
        std::vector<std::string>{"drug", "state", "day", "total_count", "symptom_count"})
        throw ParseError("count cube: unexpected header '" + line + "'");
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        try {
            auto f = csv::split_line(line);
            if (f.size() != 5) throw ParseError("expected 5 fields");
            auto day = csv::parse_int(f[2]);
            auto total = csv::parse_int(f[3]);
            auto sym = csv::parse_int(f[4]);
            if (total < 0 || sym < 0) throw ParseError("negative count");
            if (day < 0 || day >= calendar.n_days) throw ParseError("day out of range");
            cube.add(f[0], f[1], static_cast<int>(day), static_cast<std::uint32_t>(total),
                     static_cast<std::uint32_t>(sym));
        } catch (const Error& e) {
            throw ParseError("count cube line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (lexicon)
        for (const auto& drug : cube.drugs())
            if (const auto* e = lexicon->find(drug)) cube.set_rx_otc(drug, e->rx_otc);
    return cube;
}

std::vector<std::pair<std::string, std::size_t>> recalls_per_state(std::span<const RecallRecord> recalls,
                                                                   const StudyCalendar& calendar) {
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& s : calendar.states) out.emplace_back(s, 0);
    for (const auto& r : recalls) {
        if (r.nationwide) continue;
        for (auto& [state, n] : out)
            if (std::binary_search(r.states.begin(), r.states.end(), state)) ++n;
    }
    return out;
}

} // namespace sentinel
