#include "sentinel/labeling.hpp"
#include "sentinel/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace sentinel;

namespace {

std::vector<FeatureRow> rows_for(const std::string& drug, const std::vector<std::string>& states, int first, int last) {
    std::vector<FeatureRow> rows;
    for (const auto& s : states)
        for (int d = first; d <= last; ++d) rows.push_back({drug, s, d, {}});
    return rows;
}

RecallRecord recall(const std::string& drug, int day, std::vector<std::string> states, bool nationwide = false) {
    return {drug, {}, day, std::move(states), nationwide, RecallClass::II, RxOtc::RX};
}

const LabeledExample* find(const std::vector<LabeledExample>& v, const std::string& state, int day) {
    auto it = std::find_if(v.begin(), v.end(), [&](const auto& e) { return e.state == state && e.day == day; });
    return it == v.end() ? nullptr : &*it;
}

} // namespace

TEST_SUITE("labeling") {

TEST_CASE("exact-day labels") {
    const auto rows = rows_for("d", {"TX"}, 49, 99);
    std::vector<RecallRecord> r{recall("d", 100, {"TX"})};
    const auto ex = label_examples(rows, r, 7, 365);
    REQUIRE(find(ex, "TX", 93));
    CHECK(find(ex, "TX", 93)->label == 1);
    CHECK(find(ex, "TX", 93)->classification == RecallClass::II);
    CHECK(find(ex, "TX", 93)->rx_otc == RxOtc::RX);
    CHECK(find(ex, "TX", 92)->label == 0);
    CHECK_FALSE(find(ex, "TX", 92)->classification);
    CHECK(find(ex, "TX", 94)->label == 0);
    CHECK(std::count_if(ex.begin(), ex.end(), [](const auto& e) { return e.label; }) == 1);
}

TEST_CASE("nationwide recall labels every state") {
    const std::vector<std::string> states{"AK", "AL", "TX"};
    const auto rows = rows_for("d", states, 49, 120);
    std::vector<RecallRecord> r{recall("d", 100, states, true)};
    const auto ex = label_examples(rows, r, 1, 365);
    for (const auto& s : states) CHECK(find(ex, s, 99)->label == 1);
}

TEST_CASE("metadata follows the earliest recall") {
    const auto rows = rows_for("d", {"TX"}, 49, 99);
    auto late = recall("d", 150, {"TX"});
    late.classification = RecallClass::I;
    auto early = recall("d", 90, {"TX"});
    early.classification = RecallClass::III;
    std::vector<RecallRecord> r{late, early};
    const auto ex = label_examples(rows, r, 5, 365);
    CHECK(find(ex, "TX", 85)->label == 1);
    CHECK(find(ex, "TX", 85)->classification == RecallClass::III);
}

TEST_CASE("unobservable targets are dropped") {
    const auto rows = rows_for("d", {"TX"}, 300, 364);
    const auto ex = label_examples(rows, {}, 10, 365);
    CHECK(ex.size() == 55);
    CHECK(ex.back().day == 354);
}

TEST_CASE("horizon bounds") {
    const auto rows = rows_for("d", {"TX"}, 49, 60);
    CHECK_THROWS_AS(label_examples(rows, {}, 0, 365), ValidationError);
    CHECK_THROWS_AS(label_examples(rows, {}, 41, 365), ValidationError);
    CHECK_NOTHROW(label_examples(rows, {}, 40, 365));
}

TEST_CASE("post_recall_exclusion") {
    const auto rows = rows_for("d", {"TX", "CA"}, 49, 120);
    std::vector<RecallRecord> r{recall("d", 100, {"TX"})};
    const auto ex = post_recall_exclusion(label_examples(rows, r, 1, 365), r);
    CHECK_FALSE(find(ex, "TX", 100));
    CHECK(find(ex, "TX", 99));
    CHECK(find(ex, "CA", 110));
    std::vector<RecallRecord> none;
    CHECK(post_recall_exclusion(label_examples(rows, none, 1, 365), none).size() == rows.size());
}

TEST_CASE("split_by_time boundaries") {
    std::vector<LabeledExample> ex(3);
    ex[0].day = 239;
    ex[1].day = 240;
    ex[2].day = 100;
    const auto s = split_by_time(ex, 240, 365);
    REQUIRE(s.train.size() == 2);
    REQUIRE(s.test.size() == 1);
    CHECK(s.test[0].day == 240);
    CHECK_THROWS_AS(split_by_time(ex, 365, 365), ValidationError);
    CHECK_THROWS_AS(split_by_time(ex, 0, 365), ValidationError);
    CHECK_THROWS_AS(split_by_time(ex, 50, 365), ValidationError);
}

TEST_CASE("labeled csv round trip") {
    const auto rows = rows_for("d", {"TX"}, 49, 99);
    std::vector<RecallRecord> r{recall("d", 100, {"TX"})};
    auto ex = label_examples(rows, r, 7, 365);
    ex[3].features[5] = 0.1;
    std::ostringstream out;
    write_labeled_csv(out, ex);
    std::istringstream in(out.str());
    const auto back = read_labeled_csv(in);
    REQUIRE(back.size() == ex.size());
    for (std::size_t i = 0; i < ex.size(); ++i) {
        CHECK(back[i].label == ex[i].label);
        CHECK(back[i].horizon == 7);
        CHECK(back[i].features == ex[i].features);
        CHECK(back[i].classification == ex[i].classification);
        CHECK(back[i].rx_otc == ex[i].rx_otc);
    }
}

TEST_CASE("desk scenario positive rate is near the rare-event regime") {
    SynthConfig cfg;
    cfg.seed = 3;
    const auto s = generate(cfg);
    const auto rows = apply_censoring(extract_all_features(s.cube), s.recalls);
    const auto ex = post_recall_exclusion(label_examples(rows, s.recalls, 1, cfg.n_days), s.recalls);
    const double rate = static_cast<double>(std::count_if(ex.begin(), ex.end(), [](const auto& e) { return e.label; })) /
                        static_cast<double>(ex.size());
    CHECK(rate >= 0.0005);
    CHECK(rate <= 0.01);
}

}
