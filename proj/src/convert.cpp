#include "sentinel/convert.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace sentinel {

namespace {

const std::map<std::string, std::string>& state_names() {
    static const std::map<std::string, std::string> names = {
        {"alabama", "AL"},        {"alaska", "AK"},        {"arizona", "AZ"},        {"arkansas", "AR"},
        {"california", "CA"},     {"colorado", "CO"},      {"connecticut", "CT"},    {"delaware", "DE"},
        {"florida", "FL"},        {"georgia", "GA"},       {"hawaii", "HI"},         {"idaho", "ID"},
        {"illinois", "IL"},       {"indiana", "IN"},       {"iowa", "IA"},           {"kansas", "KS"},
        {"kentucky", "KY"},       {"louisiana", "LA"},     {"maine", "ME"},          {"maryland", "MD"},
        {"massachusetts", "MA"},  {"michigan", "MI"},      {"minnesota", "MN"},      {"mississippi", "MS"},
        {"missouri", "MO"},       {"montana", "MT"},       {"nebraska", "NE"},       {"nevada", "NV"},
        {"new hampshire", "NH"},  {"new jersey", "NJ"},    {"new mexico", "NM"},     {"new york", "NY"},
        {"north carolina", "NC"}, {"north dakota", "ND"},  {"ohio", "OH"},           {"oklahoma", "OK"},
        {"oregon", "OR"},         {"pennsylvania", "PA"},  {"rhode island", "RI"},   {"south carolina", "SC"},
        {"south dakota", "SD"},   {"tennessee", "TN"},     {"texas", "TX"},          {"utah", "UT"},
        {"vermont", "VT"},        {"virginia", "VA"},      {"washington", "WA"},     {"west virginia", "WV"},
        {"wisconsin", "WI"},      {"wyoming", "WY"}};
    return names;
}

std::optional<Date> parse_fda_date(const std::string& s) {
    if (s.size() == 8 && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
        return parse_iso_date(s.substr(0, 4) + "-" + s.substr(4, 2) + "-" + s.substr(6, 2));
    return parse_iso_date(s);
}

std::string first_string(const nlohmann::json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return {};
    if (it->is_string()) return it->get<std::string>();
    if (it->is_array() && !it->empty() && it->front().is_string()) return it->front().get<std::string>();
    return {};
}

std::set<std::string> states_in(const std::string& pattern, const StudyCalendar& calendar) {
    std::set<std::string> found;
    // Upper-case two-letter tokens in the raw text.
    std::string tok;
    auto flush = [&] {
        if (tok.size() == 2 && calendar.has_state(tok)) found.insert(tok);
        tok.clear();
    };
    for (char c : pattern) {
        if (std::isalpha(static_cast<unsigned char>(c)))
            tok.push_back(c);
        else
            flush();
    }
    flush();
    // Full names, matched as whole-token phrases. "west virginia" also contains "virginia";
    // accept the shorter name only where it is not part of the longer one.
    const auto text = " " + normalize_text(pattern) + " ";
    for (const auto& [name, code] : state_names()) {
        if (!calendar.has_state(code)) continue;
        for (auto pos = text.find(" " + name + " "); pos != std::string::npos;
             pos = text.find(" " + name + " ", pos + 1)) {
            if (name == "virginia" && pos >= 5 && text.compare(pos - 5, 5, " west") == 0) continue;
            found.insert(code);
            break;
        }
    }
    return found;
}

} // namespace

ParseResult<RecallRecord> convert_openfda(const nlohmann::json& document, const StudyCalendar& calendar,
                                          const DrugLexicon* lexicon) {
    const nlohmann::json* results = &document;
    if (document.is_object()) {
        auto it = document.find("results");
        if (it == document.end()) throw ParseError("openFDA document has no \"results\" array");
        results = &*it;
    }
    if (!results->is_array()) throw ParseError("openFDA results must be an array");

    ParseResult<RecallRecord> out;
    std::size_t index = 0;
    for (const auto& rec : *results) {
        ++index;
        auto fail = [&](std::string reason) { out.errors.push_back({index, std::move(reason)}); };
        if (!rec.is_object()) {
            fail("record is not an object");
            continue;
        }
        const nlohmann::json empty = nlohmann::json::object();
        const auto& ofda = rec.contains("openfda") && rec["openfda"].is_object() ? rec["openfda"] : empty;

        auto date = parse_fda_date(first_string(rec, "recall_initiation_date"));
        if (!date) {
            fail("missing or invalid recall_initiation_date");
            continue;
        }
        const int day = calendar.day_index(*date);
        if (day < 0) {
            fail("recall_initiation_date precedes the study window");
            continue;
        }

        auto cls_text = first_string(rec, "classification");
        if (cls_text.rfind("Class ", 0) == 0) cls_text.erase(0, 6);
        auto cls = parse_recall_class(cls_text);
        if (!cls) {
            fail("unrecognised classification '" + first_string(rec, "classification") + "'");
            continue;
        }

        const auto pattern = first_string(rec, "distribution_pattern");
        const auto norm_pattern = normalize_text(pattern);
        const bool nationwide = (" " + norm_pattern + " ").find(" nationwide ") != std::string::npos ||
                                norm_pattern.find("nation wide") != std::string::npos;
        std::vector<std::string> states;
        if (nationwide) {
            states = calendar.states;
        } else {
            auto found = states_in(pattern, calendar);
            states.assign(found.begin(), found.end());
        }
        if (states.empty()) {
            fail("distribution_pattern names no known state");
            continue;
        }

        std::vector<std::string> drugs;
        if (lexicon) {
            const auto text = normalize_text(first_string(rec, "product_description") + " " +
                                             first_string(ofda, "generic_name") + " " +
                                             first_string(ofda, "brand_name"));
            for (const auto& name : match_drugs(text, *lexicon)) drugs.push_back(name);
        } else if (auto g = normalize_text(first_string(ofda, "generic_name")); !g.empty()) {
            drugs.push_back(g);
        }
        if (drugs.empty()) {
            fail("could not identify the recalled drug");
            continue;
        }

        std::optional<RxOtc> rx;
        const auto product_type = first_string(ofda, "product_type");
        if (product_type.find("PRESCRIPTION") != std::string::npos)
            rx = RxOtc::RX;
        else if (product_type.find("OTC") != std::string::npos)
            rx = RxOtc::OTC;

        for (const auto& drug : drugs) {
            RecallRecord r;
            r.drug = drug;
            r.initiation_date = *date;
            r.day = day;
            r.states = states;
            r.nationwide = nationwide || states.size() == calendar.states.size();
            r.classification = *cls;
            r.rx_otc = rx.value_or(RxOtc::Unclassified);
            if (!rx && lexicon)
                if (const auto* e = lexicon->find(drug)) r.rx_otc = e->rx_otc;
            out.records.push_back(std::move(r));
        }
    }
    return out;
}

} // namespace sentinel
