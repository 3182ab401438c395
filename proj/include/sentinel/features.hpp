#pragma once

#include "sentinel/common.hpp"
#include "sentinel/ingest.hpp"

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sentinel {

inline constexpr std::size_t kAttributeCount = 20;
inline constexpr int kMaxSlopeWeeks = 7;
/// Days 0..48 have no complete 7-week window; the first feature row is day 49.
inline constexpr int kWarmupDays = 49;
inline constexpr double kRatioSmoothing = 1.0;

/// Attribute layout:
///   [0..6]   total-query OLS slope over the trailing 1..7 weeks
///   [7..13]  symptom-query OLS slope over the trailing 1..7 weeks
///   [14..16] total-query spike ratios 1/7, 1/30, 7/30
///   [17..19] symptom-query spike ratios 1/7, 1/30, 7/30
using Attributes = std::array<double, kAttributeCount>;

/// Column names, in attribute order (slope_t_w1 ... rs_7_30).
const std::array<std::string, kAttributeCount>& attribute_names();

struct FeatureRow {
    std::string drug;
    std::string state;
    int day = 0;
    Attributes attrs{};
};

/// OLS slope of counts against offsets 0..7k-1, in queries per day.
/// Throws ValidationError unless counts.size() == 7 * k_weeks and k_weeks is in [1, 7].
double window_slope(std::span<const double> counts, int k_weeks);

/// (mean of the trailing short_days + alpha) / (mean of the trailing long_days + alpha).
/// The last element of counts is the current day; both windows end there.
double spike_ratio(std::span<const double> counts, int short_days, int long_days, double alpha = kRatioSmoothing);

/// Attributes for one (drug, state) at `day`. Unknown series give the all-zero row
/// (slopes 0, ratios 1). Throws ValidationError for day < kWarmupDays or past the cube end.
FeatureRow extract_features(const CountCube& cube, const std::string& drug, const std::string& state, int day);

/// Every (drug, state, day) for drugs in the cube, states of the cube, and days
/// [kWarmupDays, n_days), in (drug, state, day) order.
std::vector<FeatureRow> extract_all_features(const CountCube& cube);

/// Drops rows at or after the first recall day of their (drug, state).
std::vector<FeatureRow> apply_censoring(std::vector<FeatureRow> rows, std::span<const RecallRecord> recalls);

void write_feature_csv(std::ostream& out, std::span<const FeatureRow> rows);
std::vector<FeatureRow> read_feature_csv(std::istream& in);

/// Shared column parsing for files that extend the feature layout.
std::string feature_csv_header();
void write_feature_fields(std::ostream& out, const FeatureRow& row);
FeatureRow parse_feature_fields(const std::vector<std::string>& fields);

} // namespace sentinel
