#include "sentinel/features.hpp"

#include "../oracles.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace sentinel;

namespace {

std::vector<double> seq(std::initializer_list<double> v) { return v; }

CountCube small_cube() { return CountCube(120, {"CA", "TX"}); }

} // namespace

TEST_SUITE("features") {

TEST_CASE("window_slope examples") {
    CHECK(window_slope(seq({1, 2, 3, 4, 5, 6, 7}), 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(window_slope(seq({4, 4, 4, 4, 4, 4, 4}), 1) == 0.0);
    CHECK(window_slope(seq({2, 1, 3, 0, 4, 2, 5}), 1) == doctest::Approx(3.0 / 7.0).epsilon(1e-15));
    CHECK_THROWS_AS(window_slope(seq({1, 2, 3}), 1), ValidationError);
    CHECK_THROWS_AS(window_slope(std::vector<double>(56, 0.0), 8), ValidationError);
}

TEST_CASE("window_slope matches the OLS oracle and is translation invariant") {
    std::mt19937_64 rng(11);
    std::poisson_distribution<int> pois(6.0);
    for (int k = 1; k <= kMaxSlopeWeeks; ++k) {
        std::vector<double> v(static_cast<std::size_t>(7 * k));
        for (auto& x : v) x = pois(rng);
        const double s = window_slope(v, k);
        CHECK(std::abs(s - oracle::ols_slope(v)) < 1e-12);
        auto shifted = v, scaled = v;
        for (auto& x : shifted) x += 13;
        for (auto& x : scaled) x *= 3;
        CHECK(std::abs(window_slope(shifted, k) - s) < 1e-12);
        CHECK(std::abs(window_slope(scaled, k) - 3 * s) < 1e-12);
    }
}

TEST_CASE("spike_ratio examples") {
    CHECK(spike_ratio(seq({0, 0, 1, 0, 2, 0, 7}), 1, 7) == doctest::Approx(56.0 / 17.0).epsilon(1e-15));
    CHECK(spike_ratio(std::vector<double>(30, 0.0), 7, 30) == 1.0);
    CHECK(spike_ratio(std::vector<double>(30, 4.0), 1, 30) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(spike_ratio(seq({1, 2}), 1, 7), ValidationError);
    CHECK_THROWS_AS(spike_ratio(std::vector<double>(30, 0.0), 7, 7), ValidationError);
}

TEST_CASE("spike_ratio is finite and positive on count series") {
    std::mt19937_64 rng(5);
    std::geometric_distribution<int> g(0.2);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> v(30);
        for (auto& x : v) x = g(rng);
        for (auto [s, l] : {std::pair{1, 7}, {1, 30}, {7, 30}}) {
            const double r = spike_ratio(v, s, l);
            CHECK(std::isfinite(r));
            CHECK(r > 0);
            CHECK(std::abs(r - oracle::smoothed_ratio(v, s, l)) < 1e-12);
        }
    }
}

TEST_CASE("attribute names") {
    const auto& n = attribute_names();
    CHECK(n[0] == "slope_t_w1");
    CHECK(n[13] == "slope_s_w7");
    CHECK(n[14] == "rt_1_7");
    CHECK(n[19] == "rs_7_30");
}

TEST_CASE("extract_features on degenerate cubes") {
    auto cube = small_cube();
    const auto zero = extract_features(cube, "nothing", "TX", 60);
    for (std::size_t i = 0; i < 14; ++i) CHECK(zero.attrs[i] == 0.0);
    for (std::size_t i = 14; i < 20; ++i) CHECK(zero.attrs[i] == 1.0);
    CHECK_THROWS_AS(extract_features(cube, "x", "TX", kWarmupDays - 1), ValidationError);
    CHECK_THROWS_AS(extract_features(cube, "x", "TX", 120), ValidationError);

    for (int d = 0; d < 120; ++d) cube.add("ramp", "TX", d, static_cast<std::uint32_t>(d + 1), static_cast<std::uint32_t>(d + 1));
    const auto ramp = extract_features(cube, "ramp", "TX", 100);
    for (std::size_t i = 0; i < 14; ++i) CHECK(ramp.attrs[i] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("extract_features matches a brute-force recomputation") {
    std::mt19937_64 rng(21);
    std::poisson_distribution<int> pois(4.0);
    auto cube = small_cube();
    std::vector<double> total(120), symptom(120);
    for (int d = 0; d < 120; ++d) {
        const auto t = static_cast<std::uint32_t>(pois(rng));
        const auto s = static_cast<std::uint32_t>(rng() % (t + 1));
        if (t) cube.add("drug", "CA", d, t, s);
        total[static_cast<std::size_t>(d)] = t;
        symptom[static_cast<std::size_t>(d)] = s;
    }
    for (int day : {49, 77, 119}) {
        const auto row = extract_features(cube, "drug", "CA", day);
        auto trailing = [&](const std::vector<double>& v, int len) {
            return std::vector<double>(v.begin() + day + 1 - len, v.begin() + day + 1);
        };
        for (int k = 1; k <= 7; ++k) {
            CHECK(std::abs(row.attrs[static_cast<std::size_t>(k - 1)] - oracle::ols_slope(trailing(total, 7 * k))) < 1e-12);
            CHECK(std::abs(row.attrs[static_cast<std::size_t>(6 + k)] - oracle::ols_slope(trailing(symptom, 7 * k))) < 1e-12);
        }
        const auto t30 = trailing(total, 30), s30 = trailing(symptom, 30);
        CHECK(std::abs(row.attrs[14] - oracle::smoothed_ratio(t30, 1, 7)) < 1e-12);
        CHECK(std::abs(row.attrs[15] - oracle::smoothed_ratio(t30, 1, 30)) < 1e-12);
        CHECK(std::abs(row.attrs[16] - oracle::smoothed_ratio(t30, 7, 30)) < 1e-12);
        CHECK(std::abs(row.attrs[17] - oracle::smoothed_ratio(s30, 1, 7)) < 1e-12);
        CHECK(std::abs(row.attrs[18] - oracle::smoothed_ratio(s30, 1, 30)) < 1e-12);
        CHECK(std::abs(row.attrs[19] - oracle::smoothed_ratio(s30, 7, 30)) < 1e-12);
    }
}

TEST_CASE("extract_features is local to the trailing 49 days") {
    auto a = small_cube(), b = small_cube();
    for (int d = 0; d < 120; ++d) {
        a.add("drug", "TX", d, 3, 1);
        b.add("drug", "TX", d, d < 40 || d > 89 ? 50 : 3, 1);
    }
    const auto ra = extract_features(a, "drug", "TX", 89);
    const auto rb = extract_features(b, "drug", "TX", 89);
    CHECK(ra.attrs == rb.attrs);
    CHECK(extract_features(a, "drug", "TX", 90).attrs != extract_features(b, "drug", "TX", 90).attrs);
}

TEST_CASE("extract_all_features covers drugs x states x post-warm-up days in order") {
    auto cube = small_cube();
    cube.add("b", "TX", 3, 1, 0);
    cube.add("a", "TX", 3, 1, 0);
    const auto rows = extract_all_features(cube);
    REQUIRE(rows.size() == 2u * 2u * (120 - kWarmupDays));
    CHECK(rows.front().drug == "a");
    CHECK(rows.front().state == "CA");
    CHECK(rows.front().day == kWarmupDays);
    CHECK(rows.back().drug == "b");
    CHECK(rows.back().state == "TX");
    CHECK(rows.back().day == 119);
}

TEST_CASE("apply_censoring") {
    auto cube = small_cube();
    cube.add("d", "TX", 1, 1, 0);
    const auto rows = extract_all_features(cube);
    RecallRecord r1{"d", {}, 100, {"TX"}, false, RecallClass::II, RxOtc::RX};
    RecallRecord r2{"d", {}, 110, {"TX"}, false, RecallClass::II, RxOtc::RX};
    std::vector<RecallRecord> recalls{r2, r1};
    const auto kept = apply_censoring(rows, recalls);
    auto has = [&](const std::string& s, int d) {
        return std::any_of(kept.begin(), kept.end(), [&](const auto& r) { return r.state == s && r.day == d; });
    };
    CHECK(has("TX", 99));
    CHECK_FALSE(has("TX", 100));
    CHECK_FALSE(has("TX", 105));
    CHECK(has("CA", 119));
    CHECK(apply_censoring(kept, recalls).size() == kept.size());
}

TEST_CASE("feature csv round trip is exact") {
    std::mt19937_64 rng(2);
    std::poisson_distribution<int> pois(9.0);
    auto cube = small_cube();
    for (int d = 0; d < 120; ++d) cube.add("x,y", "CA", d, static_cast<std::uint32_t>(pois(rng)), 0);
    const auto rows = extract_all_features(cube);
    std::ostringstream out;
    write_feature_csv(out, rows);
    std::istringstream in(out.str());
    const auto back = read_feature_csv(in);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].drug == rows[i].drug);
        CHECK(back[i].day == rows[i].day);
        CHECK(back[i].attrs == rows[i].attrs);
    }
}

}
