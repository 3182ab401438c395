#include "sentinel/features.hpp"

#include "sentinel/csv.hpp"
#include "sentinel/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

namespace sentinel {

const std::array<std::string, kAttributeCount>& attribute_names() {
    static const std::array<std::string, kAttributeCount> names = [] {
        std::array<std::string, kAttributeCount> n;
        for (int k = 1; k <= kMaxSlopeWeeks; ++k) {
            n[k - 1] = "slope_t_w" + std::to_string(k);
            n[kMaxSlopeWeeks + k - 1] = "slope_s_w" + std::to_string(k);
        }
        n[14] = "rt_1_7";
        n[15] = "rt_1_30";
        n[16] = "rt_7_30";
        n[17] = "rs_1_7";
        n[18] = "rs_1_30";
        n[19] = "rs_7_30";
        return n;
    }();
    return names;
}

double window_slope(std::span<const double> counts, int k_weeks) {
    if (k_weeks < 1 || k_weeks > kMaxSlopeWeeks)
        throw ValidationError("slope window must span 1 to 7 weeks");
    const std::size_t n = static_cast<std::size_t>(7 * k_weeks);
    if (counts.size() != n)
        throw ValidationError("slope window of " + std::to_string(k_weeks) + " week(s) needs " +
                              std::to_string(n) + " values, got " + std::to_string(counts.size()));
    // x = 0..n-1: x_bar = (n-1)/2, Sxx = n(n^2-1)/12.
    const double x_bar = (static_cast<double>(n) - 1.0) / 2.0;
    const double sxx = static_cast<double>(n) * (static_cast<double>(n * n) - 1.0) / 12.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) sxy += (static_cast<double>(i) - x_bar) * counts[i];
    return sxy / sxx;
}

double spike_ratio(std::span<const double> counts, int short_days, int long_days, double alpha) {
    if (short_days < 1 || short_days >= long_days)
        throw ValidationError("spike ratio needs 1 <= short window < long window");
    if (counts.size() < static_cast<std::size_t>(long_days))
        throw ValidationError("spike ratio needs " + std::to_string(long_days) + " days of history");
    auto tail_mean = [&](int days) {
        auto first = counts.end() - days;
        return std::accumulate(first, counts.end(), 0.0) / days;
    };
    return (tail_mean(short_days) + alpha) / (tail_mean(long_days) + alpha);
}

namespace {

constexpr int kHistory = 7 * kMaxSlopeWeeks;

void fill_channel(std::span<const double> window, double* slopes, double* ratios) {
    for (int k = 1; k <= kMaxSlopeWeeks; ++k) slopes[k - 1] = window_slope(window.last(7 * k), k);
    ratios[0] = spike_ratio(window, 1, 7);
    ratios[1] = spike_ratio(window, 1, 30);
    ratios[2] = spike_ratio(window, 7, 30);
}

Attributes attributes_for(const CountCube::Series* s, int day) {
    std::array<double, kHistory> total{}, symptom{};
    if (s) {
        for (int i = 0; i < kHistory; ++i) {
            total[i] = s->total[day - kHistory + 1 + i];
            symptom[i] = s->symptom[day - kHistory + 1 + i];
        }
    }
    Attributes a{};
    fill_channel(total, &a[0], &a[14]);
    fill_channel(symptom, &a[7], &a[17]);
    return a;
}

} // namespace

FeatureRow extract_features(const CountCube& cube, const std::string& drug, const std::string& state, int day) {
    if (day < kWarmupDays)
        throw ValidationError("day " + std::to_string(day) + " is inside the " + std::to_string(kWarmupDays) +
                              "-day warm-up");
    if (day >= cube.n_days()) throw ValidationError("day " + std::to_string(day) + " is past the cube end");
    return {drug, state, day, attributes_for(cube.series(drug, state), day)};
}

std::vector<FeatureRow> extract_all_features(const CountCube& cube) {
    const auto drugs = cube.drugs();
    const auto& states = cube.states();
    std::vector<std::string> sorted_states = states;
    std::sort(sorted_states.begin(), sorted_states.end());
    const int days = std::max(0, cube.n_days() - kWarmupDays);

    std::vector<FeatureRow> rows(drugs.size() * sorted_states.size() * static_cast<std::size_t>(days));
    parallel_for(drugs.size() * sorted_states.size(), [&](std::size_t pair) {
        const auto& drug = drugs[pair / sorted_states.size()];
        const auto& state = sorted_states[pair % sorted_states.size()];
        const auto* s = cube.series(drug, state);
        for (int i = 0; i < days; ++i) {
            auto& row = rows[pair * days + i];
            row.drug = drug;
            row.state = state;
            row.day = kWarmupDays + i;
            row.attrs = attributes_for(s, row.day);
        }
    });
    return rows;
}

std::vector<FeatureRow> apply_censoring(std::vector<FeatureRow> rows, std::span<const RecallRecord> recalls) {
    const auto first = first_recall_days(recalls);
    std::erase_if(rows, [&](const FeatureRow& r) {
        auto it = first.find({r.drug, r.state});
        return it != first.end() && r.day >= it->second;
    });
    return rows;
}

std::string feature_csv_header() {
    std::string h = "drug,state,day";
    for (const auto& n : attribute_names()) h += "," + n;
    return h;
}

void write_feature_fields(std::ostream& out, const FeatureRow& row) {
    out << csv::escape(row.drug) << ',' << row.state << ',' << row.day;
    for (double v : row.attrs) out << ',' << csv::format_double(v);
}

FeatureRow parse_feature_fields(const std::vector<std::string>& f) {
    if (f.size() < 3 + kAttributeCount) throw ParseError("too few columns");
    FeatureRow row;
    row.drug = f[0];
    row.state = f[1];
    row.day = static_cast<int>(csv::parse_int(f[2]));
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
        row.attrs[i] = csv::parse_double(f[3 + i]);
        if (!std::isfinite(row.attrs[i])) throw ParseError("non-finite attribute " + attribute_names()[i]);
    }
    return row;
}

void write_feature_csv(std::ostream& out, std::span<const FeatureRow> rows) {
    out << feature_csv_header() << '\n';
    for (const auto& r : rows) {
        write_feature_fields(out, r);
        out << '\n';
    }
}

std::vector<FeatureRow> read_feature_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("feature file: missing header");
    if (line != feature_csv_header()) throw ParseError("feature file: unexpected header");
    std::vector<FeatureRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto f = csv::split_line(line);
            if (f.size() != 3 + kAttributeCount) throw ParseError("expected 23 columns");
            rows.push_back(parse_feature_fields(f));
        } catch (const Error& e) {
            throw ParseError("feature file line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

} // namespace sentinel
