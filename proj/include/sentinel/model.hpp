#pragma once

#include "sentinel/features.hpp"
#include "sentinel/labeling.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace sentinel {

/// 1 (bias) + d linear terms + d(d-1)/2 pairwise products.
constexpr std::size_t interaction_dim(std::size_t d) { return 1 + d + d * (d - 1) / 2; }
inline constexpr std::size_t kInteractionDim = interaction_dim(kAttributeCount);  // 211

/// Attribute indices a term is built from: bias {-1,-1}, linear {i,-1}, product {i,j} with i<j.
struct InteractionTerm {
    int first = -1;
    int second = -1;
    bool involves(int attr) const { return first == attr || second == attr; }
};

/// Term layout matching interaction_map: bias, x_0..x_{d-1}, then x_i*x_j in lexicographic (i, j).
std::vector<InteractionTerm> interaction_terms(std::size_t d);

/// Throws ValidationError on a non-finite input.
Eigen::VectorXd interaction_map(std::span<const double> x);

/// Column means and population standard deviations; zero deviations are replaced by 1.
struct StandardizationStats {
    Attributes mean{};
    Attributes stddev{};

    static StandardizationStats fit(std::span<const Attributes> rows);
    Attributes apply(const Attributes& x) const;
};

struct KMeansResult {
    Eigen::MatrixXd centroids;         // k x d
    std::vector<int> assignments;      // per point, in [0, k)
    double objective = 0.0;            // sum of squared distances to assigned centroid
    std::vector<double> objective_history;  // one entry per assignment pass
    int iterations = 0;
    bool converged = false;
};

/// k-means++ seeding followed by Lloyd iterations until every centroid moves less than
/// `tolerance` or `max_iterations` updates have run. Nearest-centroid ties go to the lower
/// index. A cluster that empties is re-seeded with the point farthest from its centroid.
/// Throws ValidationError if k < 1 or k exceeds the number of points.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iterations = 100,
                    double tolerance = 1e-6);

struct ClusterClassifier {
    int cluster_id = 0;
    std::size_t cluster_size = 0;  // negatives from this cluster
    Eigen::VectorXd weights;
    bool stats_valid = false;      // false when residual dof < 1
    std::vector<double> t_stats;
    std::vector<double> p_values;

    double output(const Eigen::VectorXd& phi) const { return weights.dot(phi); }
};

/// Ridge least squares on targets -1 (label 0) / +1 (label 1), penalizing every column except
/// column 0, which is taken to be the bias. With residual dof n - p >= 1, reports per-term
/// t statistics and two-sided p-values from the ridge sandwich covariance
/// sigma^2 M^-1 X'X M^-1, M = X'X + lambda*D.
ClusterClassifier fit_linear(const Eigen::MatrixXd& design, std::span<const int> labels, double lambda = 1e-3);

struct TrainOptions {
    int k = 500;
    double lambda = 1e-3;
    std::uint64_t seed = 0;
};

struct Ensemble {
    std::vector<ClusterClassifier> members;  // cluster_size descending, ties by cluster_id
    StandardizationStats standardization;
    int k = 0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    int horizon = 0;        // provenance only
    int train_end_day = 0;  // provenance only
};

/// Standardizes on the training rows, clusters the standardized negatives, and fits one
/// classifier per cluster against all positives. Clusters holding fewer than two negatives are
/// folded into the nearest remaining cluster.
Ensemble train_ensemble(std::span<const Attributes> x, std::span<const int> labels, const TrainOptions& options);
Ensemble train_ensemble(std::span<const LabeledExample> train, const TrainOptions& options);

/// Raw output of each member, in member order.
std::vector<double> member_outputs(const Ensemble& ensemble, const Attributes& x);

/// Max over the first prune_m members (all when unset). Throws ValidationError if prune_m is
/// outside [1, members].
double predict(const Ensemble& ensemble, const Attributes& x, std::optional<std::size_t> prune_m = std::nullopt);
std::vector<double> predict_all(const Ensemble& ensemble, std::span<const LabeledExample> examples,
                                std::optional<std::size_t> prune_m = std::nullopt);

struct ImportanceReport {
    std::array<double, kAttributeCount> credited_fraction{};
    std::vector<std::size_t> influential;  // attributes with fraction >= threshold
    std::size_t stats_valid_members = 0;
    double alpha = 0.05;
    double per_term_alpha = 0.0;  // Bonferroni: alpha / number of terms
    double threshold = 0.2;
};

/// A term is significant in a member when p < alpha / 211. An attribute is credited by a member
/// when any significant non-bias term involves it, alone or in a product. Throws Error when no
/// member has valid statistics.
ImportanceReport attribute_importance(const Ensemble& ensemble, double alpha = 0.05, double fraction_threshold = 0.2);

nlohmann::ordered_json model_to_json(const Ensemble& ensemble);
Ensemble model_from_json(const nlohmann::json& j);
void write_model(std::ostream& out, const Ensemble& ensemble);
Ensemble read_model(std::istream& in);

} // namespace sentinel
