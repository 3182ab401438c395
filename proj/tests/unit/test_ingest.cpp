#include "sentinel/convert.hpp"
#include "sentinel/ingest.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace sentinel;

namespace {

StudyCalendar cal() { return StudyCalendar{}; }

DrugLexicon lexicon() {
    return DrugLexicon({{"atorvastatin", {"lipitor"}, RxOtc::RX}, {"ibuprofen", {"advil"}, RxOtc::OTC}});
}

ParseResult<QueryRecord> queries(const std::string& text) {
    std::istringstream in(text);
    return parse_query_log(in, cal());
}

ParseResult<RecallRecord> recalls(const std::string& text, const StudyCalendar& c = cal()) {
    std::istringstream in(text);
    return parse_recall_file(in, c);
}

QueryRecord q(int day, const std::string& state, const std::string& text) {
    return {"u", cal().date_at(day), day, state, text};
}

} // namespace

TEST_SUITE("ingest") {

TEST_CASE("parse_query_log") {
    auto ok = queries(R"({"user_id":"u1","date":"2015-03-02","state":"TX","text":"lipitor rash"})"
                      "\n");
    CHECK(ok.records.size() == 1);
    CHECK(ok.errors.empty());
    CHECK(ok.records[0].day == 60);

    auto bad = queries(R"({"user_id":"u1","date":"2015-13-02","state":"TX","text":"lipitor rash"})"
                       "\n");
    CHECK(bad.records.empty());
    REQUIRE(bad.errors.size() == 1);
    CHECK(bad.errors[0].line == 1);

    auto empty = queries("");
    CHECK(empty.records.empty());
    CHECK(empty.errors.empty());
}

TEST_CASE("query rows are rejected individually") {
    auto r = queries("not json\n"
                     R"({"user_id":"u","date":"2014-12-31","state":"TX","text":"x"})"
                     "\n"
                     R"({"user_id":"u","date":"2015-01-01","state":"ZZ","text":"x"})"
                     "\n"
                     R"({"user_id":"u","date":"2015-01-01","state":"TX"})"
                     "\n"
                     R"({"user_id":"u","date":"2015-01-01","state":"TX","text":"advil"})"
                     "\n");
    CHECK(r.records.size() == 1);
    REQUIRE(r.errors.size() == 4);
    CHECK(r.errors[0].line == 1);
    CHECK(r.errors[3].line == 4);
}

TEST_CASE("parse_recall_file") {
    auto nat = recalls(R"({"drug":"atorvastatin","initiation_date":"2015-04-10","distribution":"nationwide","classification":"II"})"
                       "\n");
    REQUIRE(nat.records.size() == 1);
    CHECK(nat.records[0].states.size() == 50);
    CHECK(nat.records[0].nationwide);
    CHECK(nat.records[0].day == 99);

    auto two = recalls(R"({"drug":"x","initiation_date":"2015-04-10","distribution":["TX","CA"],"classification":"I","rx_otc":"OTC"})"
                       "\n");
    REQUIRE(two.records.size() == 1);
    CHECK(two.records[0].states == std::vector<std::string>{"CA", "TX"});
    CHECK_FALSE(two.records[0].nationwide);
    CHECK(two.records[0].rx_otc == RxOtc::OTC);

    auto bad = recalls(R"({"drug":"x","initiation_date":"2015-04-10","distribution":["TX"],"classification":"IV"})"
                       "\n");
    CHECK(bad.records.empty());
    CHECK(bad.errors.size() == 1);
}

TEST_CASE("duplicate recall triples are dropped") {
    auto r = recalls(R"({"drug":"x","initiation_date":"2015-04-10","distribution":["TX","CA"],"classification":"I"})"
                     "\n"
                     R"({"drug":"x","initiation_date":"2015-04-10","distribution":["TX"],"classification":"II"})"
                     "\n"
                     R"({"drug":"x","initiation_date":"2015-04-10","distribution":["TX","NY"],"classification":"II"})"
                     "\n");
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[1].states == std::vector<std::string>{"NY"});
}

TEST_CASE("recall file round trip") {
    auto r = recalls(R"({"drug":"x","initiation_date":"2015-04-10","distribution":"nationwide","classification":"III","rx_otc":"RX"})"
                     "\n"
                     R"({"drug":"y","initiation_date":"2015-05-10","distribution":["WY"],"classification":"I"})"
                     "\n");
    std::ostringstream out;
    write_recall_file(out, r.records);
    auto again = recalls(out.str());
    REQUIRE(again.records.size() == 2);
    CHECK(again.records[0].nationwide);
    CHECK(again.records[1].states == std::vector<std::string>{"WY"});
    CHECK(again.records[1].classification == RecallClass::I);
}

TEST_CASE("build_count_cube") {
    const SymptomLexicon sym({"rash"});
    std::vector<QueryRecord> one{q(5, "TX", "lipitor rash")};
    auto cube = build_count_cube(one, lexicon(), sym, cal());
    CHECK(cube.at("atorvastatin", "TX", 5) == CountCube::Cell{1, 1});
    CHECK(cube.rx_otc("atorvastatin") == RxOtc::RX);

    std::vector<QueryRecord> none{q(5, "TX", "weather in boston")};
    CHECK(build_count_cube(none, lexicon(), sym, cal()).all_series().empty());

    std::vector<QueryRecord> two{q(5, "TX", "lipitor rash"), q(5, "TX", "lipitor dosage")};
    CHECK(build_count_cube(two, lexicon(), sym, cal()).at("atorvastatin", "TX", 5) == CountCube::Cell{2, 1});

    std::vector<QueryRecord> both{q(7, "CA", "advil or lipitor")};
    auto c2 = build_count_cube(both, lexicon(), sym, cal());
    CHECK(c2.at("atorvastatin", "CA", 7).total == 1);
    CHECK(c2.at("ibuprofen", "CA", 7).total == 1);
}

TEST_CASE("cube additivity and permutation invariance") {
    const SymptomLexicon sym({"rash", "nausea"});
    std::mt19937_64 rng(3);
    const std::vector<std::string> texts{"lipitor", "lipitor rash", "advil nausea", "advil", "nothing", "advil lipitor rash"};
    std::vector<QueryRecord> a, b;
    for (int i = 0; i < 400; ++i) {
        auto rec = q(static_cast<int>(rng() % 365), cal().states[rng() % 50], texts[rng() % texts.size()]);
        (i % 2 ? a : b).push_back(rec);
    }
    auto ca = build_count_cube(a, lexicon(), sym, cal());
    auto cb = build_count_cube(b, lexicon(), sym, cal());
    auto all = a;
    all.insert(all.end(), b.begin(), b.end());
    auto sum = ca;
    sum += cb;
    CHECK(build_count_cube(all, lexicon(), sym, cal()) == sum);
    std::shuffle(all.begin(), all.end(), rng);
    CHECK(build_count_cube(all, lexicon(), sym, cal()) == sum);
}

TEST_CASE("cube rejects inconsistent cells") {
    CountCube cube(365, cal().states);
    CHECK_THROWS_AS(cube.add("x", "TX", 1, 1, 2), ValidationError);
    CHECK_THROWS_AS(cube.add("x", "TX", 365, 1, 0), ValidationError);
    CHECK_THROWS_AS(cube.add("x", "ZZ", 1, 1, 0), ValidationError);
}

TEST_CASE("filter_drugs thresholds") {
    CountCube cube(365, cal().states);
    cube.add("low", "TX", 1, 999, 0);
    cube.add("edge", "TX", 1, 600, 0);
    cube.add("edge", "CA", 2, 400, 0);
    auto kept = filter_drugs(cube, 1000);
    CHECK(kept.drugs() == std::vector<std::string>{"edge"});
    CHECK(filter_drugs(cube, 0) == cube);
    // Monotone in the threshold.
    std::size_t prev = cube.drugs().size();
    for (std::uint64_t t : {0, 500, 999, 1000, 1001, 5000}) {
        const auto n = filter_drugs(cube, t).drugs().size();
        CHECK(n <= prev);
        prev = n;
    }
}

TEST_CASE("cube csv round trip") {
    CountCube cube(365, cal().states);
    cube.add("atorvastatin", "TX", 1, 5, 2);
    cube.add("atorvastatin", "AK", 364, 1, 0);
    cube.add("ibuprofen", "TX", 0, 3, 3);
    std::ostringstream out;
    write_cube_csv(out, cube);
    std::istringstream in(out.str());
    const auto lex = lexicon();
    auto back = read_cube_csv(in, cal(), &lex);
    CHECK(back == cube);
    CHECK(back.rx_otc("ibuprofen") == RxOtc::OTC);
}

TEST_CASE("cube csv errors carry line numbers") {
    std::istringstream in("drug,state,day,total_count,symptom_count\nx,TX,1,5,6\n");
    try {
        read_cube_csv(in, cal());
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("recalls_per_state excludes nationwide recalls") {
    auto r = recalls(R"({"drug":"x","initiation_date":"2015-04-10","distribution":"nationwide","classification":"II"})"
                     "\n"
                     R"({"drug":"y","initiation_date":"2015-04-10","distribution":["TX","CA"],"classification":"II"})"
                     "\n"
                     R"({"drug":"z","initiation_date":"2015-05-10","distribution":["TX"],"classification":"II"})"
                     "\n");
    const auto counts = recalls_per_state(r.records, cal());
    auto get = [&](const std::string& s) {
        return std::find_if(counts.begin(), counts.end(), [&](const auto& p) { return p.first == s; })->second;
    };
    CHECK(get("TX") == 2);
    CHECK(get("CA") == 1);
    CHECK(get("NY") == 0);
}

TEST_CASE("convert openFDA enforcement records") {
    const auto doc = nlohmann::json::parse(R"({"results":[
      {"recall_initiation_date":"20150410","classification":"Class II","distribution_pattern":"Nationwide",
       "product_description":"Lipitor 20 mg tablets","openfda":{"generic_name":["ATORVASTATIN CALCIUM"],"product_type":["HUMAN PRESCRIPTION DRUG"]}},
      {"recall_initiation_date":"20150501","classification":"Class I","distribution_pattern":"TX, CA and New York",
       "product_description":"Advil caplets","openfda":{"product_type":["HUMAN OTC DRUG"]}},
      {"recall_initiation_date":"20150501","classification":"Class I","distribution_pattern":"West Virginia",
       "product_description":"Advil caplets"},
      {"recall_initiation_date":"2015","classification":"Class I","distribution_pattern":"TX","product_description":"Advil"},
      {"recall_initiation_date":"20150501","classification":"Class I","distribution_pattern":"TX","product_description":"vitamin"}
    ]})");
    const auto lex = lexicon();
    const auto r = convert_openfda(doc, cal(), &lex);
    REQUIRE(r.records.size() == 3);
    CHECK(r.records[0].drug == "atorvastatin");
    CHECK(r.records[0].nationwide);
    CHECK(r.records[0].classification == RecallClass::II);
    CHECK(r.records[0].rx_otc == RxOtc::RX);
    CHECK(r.records[1].states == std::vector<std::string>{"CA", "NY", "TX"});
    CHECK(r.records[1].rx_otc == RxOtc::OTC);
    CHECK(r.records[2].states == std::vector<std::string>{"WV"});
    CHECK(r.records[2].rx_otc == RxOtc::OTC);  // from the lexicon
    REQUIRE(r.errors.size() == 2);
    CHECK(r.errors[0].line == 4);
    CHECK(r.errors[1].line == 5);
}

}
