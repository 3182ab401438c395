#pragma once

#include "sentinel/labeling.hpp"
#include "sentinel/model.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sentinel {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocResult {
    std::vector<RocPoint> points;  // (0,0) first, (1,1) last, one step per distinct score
    double auc = 0.0;
};

/// Throws ValidationError unless both classes are present.
RocResult roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Indices sorted by descending score; equal scores keep index order. Callers pass examples
/// in canonical (drug, state, day) order, so index order is the canonical-key tie-break.
std::vector<std::size_t> rank_descending(std::span<const double> scores);

/// ceil(T * n) with a guard against representation error in T * n; at least 1.
std::size_t top_count(double fraction, std::size_t n);

struct LiftResult {
    double fraction = 0.0;
    double lift = 0.0;
    std::size_t n_top = 0;
    std::size_t positives_in_top = 0;
    std::vector<std::pair<double, double>> curve;  // (T, lift) for T = 0.01, 0.02, ..., 1.00
};

/// Positives among the top ceil(T*N) ranked examples over the count expected from a random
/// sample of the same size. Throws ValidationError if T is outside (0, 1] or no positives exist.
LiftResult lift_at(std::span<const double> scores, std::span<const int> labels, double fraction,
                   bool with_curve = false);

struct Coefficient {
    std::string name;
    double slope = 0.0;
    double std_error = 0.0;
    double t_value = 0.0;
    double p_value = 1.0;
};

struct RankRegressionResult {
    double intercept = 0.0;
    std::vector<Coefficient> coefficients;
    double r_squared = 0.0;
    double f_statistic = 0.0;
    double model_p_value = 1.0;
    std::size_t n = 0;
};

/// OLS with intercept on average ranks of y and of every predictor, with normal-theory
/// standard errors, t p-values, R^2 and the overall F test. Throws ValidationError when there
/// are too few observations for a residual degree of freedom or a ranked predictor is constant
/// or collinear with the others.
RankRegressionResult rank_regression(std::span<const double> y, const std::vector<std::vector<double>>& predictors,
                                     const std::vector<std::string>& names = {});

struct SpearmanResult {
    double rho = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Pearson correlation of average ranks; p from t = rho * sqrt((n-2)/(1-rho^2)) on n-2 dof.
/// Throws ValidationError for n < 3, unequal lengths or a constant input.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

struct Stratum {
    std::string name;
    std::size_t overall_count = 0;
    std::size_t top_count = 0;
    std::optional<double> overall_share;
    std::optional<double> top_share;
    std::optional<double> relative_likelihood;  // top_share / overall_share - 1
};

struct StrataReport {
    double fraction = 0.05;
    std::size_t positives = 0;
    std::size_t positives_in_top = 0;
    std::vector<Stratum> recall_class;  // I, II, III
    std::vector<Stratum> rx_otc;        // RX, OTC, UNCLASSIFIED
};

/// Compares stratum shares among positives in the top-T ranked set with shares among all
/// positives. A stratum absent from all positives has no relative likelihood.
StrataReport strata_analysis(std::span<const LabeledExample> examples, std::span<const double> scores,
                             double fraction = 0.05);

struct PrunePoint {
    std::size_t m = 0;
    double lift = 0.0;
};

/// Lift at `fraction` when scoring with only the m largest-cluster members, for each m in m_grid.
std::vector<PrunePoint> prune_sweep(const Ensemble& ensemble, std::span<const LabeledExample> examples,
                                    std::span<const std::size_t> m_grid, double fraction = 0.05);

struct ClusterUsage {
    std::vector<std::size_t> sizes;  // member order
    std::vector<std::size_t> wins;   // examples where the member gave the maximum (lowest index on ties)
    std::optional<SpearmanResult> correlation;
};

ClusterUsage cluster_usage(const Ensemble& ensemble, std::span<const LabeledExample> examples);

struct PipelineSettings {
    int study_days = 365;
    int train_end_day = kDefaultTrainEndDay;
    int max_horizon = kDefaultMaxHorizon;
    int k = 500;
    double lambda = 1e-3;
    std::uint64_t seed = 0;
    double lift_fraction = 0.05;
};

struct TrainedRun {
    Ensemble ensemble;
    DatasetSplit split;
    std::vector<double> test_scores;
};

/// Labels censored rows at `horizon`, splits by time, trains, and scores the test partition.
TrainedRun run_horizon(std::span<const FeatureRow> censored_rows, std::span<const RecallRecord> recalls,
                       const PipelineSettings& settings, int horizon);

struct HorizonRow {
    int horizon = 0;
    double auc = 0.0;
    double lift = 0.0;
    std::size_t positives_in_test = 0;
    std::size_t n_test = 0;
};

struct HorizonSweepResult {
    std::vector<HorizonRow> rows;
    // Rank regressions on (horizon, positives_in_test); absent when a predictor is rank-degenerate.
    std::optional<RankRegressionResult> auc_model;
    std::optional<RankRegressionResult> lift_model;
    std::string regression_note;
};

HorizonSweepResult horizon_sweep(std::span<const FeatureRow> censored_rows, std::span<const RecallRecord> recalls,
                                 const PipelineSettings& settings, std::span<const int> horizons);

/// Everything `evaluate` reports for one trained model on its test partition.
struct EvalReport {
    int horizon = 0;
    std::size_t n_test = 0;
    std::size_t positives_in_test = 0;
    RocResult roc;
    LiftResult lift;
    StrataReport strata;
    std::optional<ImportanceReport> importance;
    ClusterUsage usage;
    std::optional<std::size_t> prune_m;
};

EvalReport evaluate_model(const Ensemble& ensemble, std::span<const LabeledExample> test, double lift_fraction,
                          std::optional<std::size_t> prune_m = std::nullopt);

nlohmann::ordered_json to_json(const RankRegressionResult& r);
nlohmann::ordered_json to_json(const StrataReport& r);
nlohmann::ordered_json to_json(const ImportanceReport& r);
nlohmann::ordered_json to_json(const EvalReport& r);
nlohmann::ordered_json to_json(const HorizonSweepResult& r);

} // namespace sentinel
