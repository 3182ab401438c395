#pragma once

#include "sentinel/features.hpp"
#include "sentinel/ingest.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace sentinel {

inline constexpr int kDefaultMaxHorizon = 40;
inline constexpr int kDefaultTrainEndDay = 240;

struct LabeledExample {
    std::string drug;
    std::string state;
    int day = 0;
    Attributes features{};
    int label = 0;
    int horizon = 0;
    // Copied from the matched recall; set only for positives.
    std::optional<RecallClass> classification;
    std::optional<RxOtc> rx_otc;
};

/// Label 1 iff the first recall of the row's (drug, state) starts exactly at day + horizon.
/// Rows whose target day lies at or beyond study_days are dropped (unobservable).
/// Throws ValidationError unless 1 <= horizon <= max_horizon.
std::vector<LabeledExample> label_examples(std::span<const FeatureRow> rows, std::span<const RecallRecord> recalls,
                                           int horizon, int study_days, int max_horizon = kDefaultMaxHorizon);

/// Removes examples at or after the first recall day of their (drug, state).
std::vector<LabeledExample> post_recall_exclusion(std::vector<LabeledExample> examples,
                                                  std::span<const RecallRecord> recalls);

struct DatasetSplit {
    std::vector<LabeledExample> train;  // day < train_end_day
    std::vector<LabeledExample> test;   // day >= train_end_day
};

/// Throws ValidationError when train_end_day is outside (0, study_days) or either side is empty.
DatasetSplit split_by_time(std::vector<LabeledExample> examples, int train_end_day, int study_days);

/// Feature columns followed by `label,horizon,classification,rx_otc`; metadata is blank for negatives.
void write_labeled_csv(std::ostream& out, std::span<const LabeledExample> examples);
std::vector<LabeledExample> read_labeled_csv(std::istream& in);

} // namespace sentinel
