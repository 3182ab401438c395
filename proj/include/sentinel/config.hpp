#pragma once

#include "sentinel/common.hpp"
#include "sentinel/eval.hpp"
#include "sentinel/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace sentinel {

/// Everything a pipeline run needs. Loaded from a JSON file, then overridden by flags.
struct RunConfig {
    StudyCalendar calendar;

    struct Paths {
        std::filesystem::path drugs, symptoms, queries, cube, recalls, features, model, openfda, input;
        std::filesystem::path out = ".";
    } paths;

    int horizon = 1;
    int max_horizon = kDefaultMaxHorizon;
    int train_end_day = kDefaultTrainEndDay;
    int k = 500;
    double lambda = 1e-3;
    double lift_fraction = 0.05;
    std::optional<std::size_t> prune;
    std::uint64_t seed = 0;
    std::uint64_t min_queries = 1000;
    std::vector<int> horizons{1, 3, 5, 10, 20, 40};
    std::vector<std::size_t> prune_grid;  // empty = 1..min(100, members)

    SynthConfig synth;

    /// Relative paths in the file resolve against base_dir (the config file's directory).
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    static RunConfig load(const std::filesystem::path& file);
    /// Paths are written relative to relative_to when they live beneath it.
    nlohmann::ordered_json to_json(const std::filesystem::path& relative_to = {}) const;

    PipelineSettings pipeline() const;
    void validate() const;

    /// The configured path, or out/default_name when unset.
    std::filesystem::path resolve(const std::filesystem::path& configured, const char* default_name) const;
};

} // namespace sentinel
