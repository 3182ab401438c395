#pragma once

#include "sentinel/common.hpp"
#include "sentinel/ingest.hpp"
#include "sentinel/lexicon.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sentinel {

enum class RampShape { Flat, Linear };

struct SynthConfig {
    int n_drugs = 20;
    int n_states = 10;  // the first n_states US postal codes
    int n_days = 365;
    Date start{std::chrono::year{2015}, std::chrono::month{1}, std::chrono::day{1}};

    // Daily baseline rate of a cell is popularity(drug) * state_weight(state).
    double popularity_median = 3.0;
    double popularity_dispersion = 0.5;  // sigma of log popularity
    std::vector<double> state_weights;   // empty = all 1
    double symptom_fraction = 0.1;

    int n_recalls = 40;
    std::array<double, 3> class_mix{0.1, 0.7, 0.2};  // I, II, III
    double rx_fraction = 0.7;
    double otc_fraction = 0.25;  // remainder is unclassified
    double nationwide_probability = 0.1;
    int max_local_states = 3;

    // Pre-recall signal over days [recall - injection_days, recall - 1].
    int injection_days = 7;
    double gamma = 5.0;
    RampShape ramp = RampShape::Flat;
    double symptom_boost = 0.0;

    std::uint64_t seed = 0;

    void validate() const;
    StudyCalendar calendar() const;
};

struct InjectionTruth {
    struct Entry {
        std::string drug;
        std::vector<std::string> states;
        int recall_day = 0;
        int window_begin = 0;  // inclusive
        int window_end = 0;    // inclusive, recall_day - 1
        double gamma = 1.0;
    };
    std::vector<Entry> entries;
};

struct SynthOutput {
    StudyCalendar calendar;
    DrugLexicon drugs;
    SymptomLexicon symptoms;
    CountCube cube;
    std::vector<RecallRecord> recalls;  // ordered by (day, drug)
    InjectionTruth truth;
    std::vector<double> popularity;     // per drug, lexicon order
};

/// Deterministic in config.seed. Each (drug, state) series draws from its own derived stream.
SynthOutput generate(const SynthConfig& config);

/// Expands the cube into templated query records, one per counted query, ordered by
/// (day, drug, state). build_count_cube over the result reproduces the cube exactly.
std::vector<QueryRecord> expand_query_log(const SynthOutput& synth, std::uint64_t seed);

nlohmann::ordered_json truth_to_json(const InjectionTruth& truth);
nlohmann::ordered_json synth_config_to_json(const SynthConfig& config);
/// Reads the keys present in j over a copy of `base`.
SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig base = {});

} // namespace sentinel
