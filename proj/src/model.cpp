#include "sentinel/model.hpp"

#include "sentinel/parallel.hpp"
#include "sentinel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace sentinel {

std::vector<InteractionTerm> interaction_terms(std::size_t d) {
    std::vector<InteractionTerm> terms;
    terms.reserve(interaction_dim(d));
    terms.push_back({-1, -1});
    for (std::size_t i = 0; i < d; ++i) terms.push_back({static_cast<int>(i), -1});
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) terms.push_back({static_cast<int>(i), static_cast<int>(j)});
    return terms;
}

Eigen::VectorXd interaction_map(std::span<const double> x) {
    const std::size_t d = x.size();
    Eigen::VectorXd phi(static_cast<Eigen::Index>(interaction_dim(d)));
    Eigen::Index t = 0;
    phi[t++] = 1.0;
    for (double v : x) {
        if (!std::isfinite(v)) throw ValidationError("interaction_map: non-finite input");
        phi[t++] = v;
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) phi[t++] = x[i] * x[j];
    return phi;
}

StandardizationStats StandardizationStats::fit(std::span<const Attributes> rows) {
    if (rows.empty()) throw ValidationError("cannot standardize an empty training set");
    StandardizationStats s;
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows)
        for (std::size_t a = 0; a < kAttributeCount; ++a) s.mean[a] += r[a];
    for (auto& m : s.mean) m /= n;
    for (const auto& r : rows)
        for (std::size_t a = 0; a < kAttributeCount; ++a) s.stddev[a] += (r[a] - s.mean[a]) * (r[a] - s.mean[a]);
    for (auto& v : s.stddev) {
        v = std::sqrt(v / n);
        if (!(v > 0.0)) v = 1.0;
    }
    return s;
}

Attributes StandardizationStats::apply(const Attributes& x) const {
    Attributes z;
    for (std::size_t a = 0; a < kAttributeCount; ++a) z[a] = (x[a] - mean[a]) / stddev[a];
    return z;
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kKMeansStream = 0x6b6d65616e73ULL;

struct Assignment {
    std::vector<int> cluster;
    std::vector<double> dist2;
};

void assign_points(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, Assignment& a) {
    const Eigen::Index n = points.rows();
    const Eigen::Index k = centroids.rows();
    constexpr Eigen::Index kBlock = 1024;
    const std::size_t blocks = static_cast<std::size_t>((n + kBlock - 1) / kBlock);
    parallel_for(blocks, [&](std::size_t b) {
        const Eigen::Index lo = static_cast<Eigen::Index>(b) * kBlock;
        const Eigen::Index hi = std::min(n, lo + kBlock);
        for (Eigen::Index i = lo; i < hi; ++i) {
            int best = 0;
            double best_d = (centroids.row(0) - points.row(i)).squaredNorm();
            for (Eigen::Index c = 1; c < k; ++c) {
                double d = (centroids.row(c) - points.row(i)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            a.cluster[i] = best;
            a.dist2[i] = best_d;
        }
    });
}

/// Moves the farthest point of a multi-point cluster into each empty cluster.
void reseed_empty(const Eigen::MatrixXd& points, Eigen::MatrixXd& centroids, Assignment& a) {
    const Eigen::Index k = centroids.rows();
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int c : a.cluster) ++counts[c];
    for (Eigen::Index c = 0; c < k; ++c) {
        if (counts[c] != 0) continue;
        std::ptrdiff_t far = -1;
        double far_d = 0.0;
        for (std::size_t i = 0; i < a.cluster.size(); ++i)
            if (counts[a.cluster[i]] > 1 && a.dist2[i] > far_d) {
                far_d = a.dist2[i];
                far = static_cast<std::ptrdiff_t>(i);
            }
        if (far < 0) continue;  // every remaining point sits on its centroid
        --counts[a.cluster[far]];
        a.cluster[far] = static_cast<int>(c);
        a.dist2[far] = 0.0;
        ++counts[c];
        centroids.row(c) = points.row(far);
    }
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int k, std::mt19937_64& rng) {
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd centroids(k, points.cols());
    auto first = static_cast<Eigen::Index>(unit_double(rng()) * static_cast<double>(n));
    centroids.row(0) = points.row(std::min(first, n - 1));
    std::vector<double> d2(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centroids.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double target = unit_double(rng()) * total;
            double cum = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                cum += d2[i];
                if (cum > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(unit_double(rng()) * static_cast<double>(n));
            pick = std::min(pick, n - 1);
        }
        centroids.row(c) = points.row(pick);
        for (Eigen::Index i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c)).squaredNorm());
    }
    return centroids;
}

} // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iterations, double tolerance) {
    if (k < 1) throw ValidationError("k-means needs k >= 1");
    if (points.rows() == 0) throw ValidationError("k-means needs at least one point");
    if (k > points.rows())
        throw ValidationError("k-means: k=" + std::to_string(k) + " exceeds the " + std::to_string(points.rows()) +
                              " points");
    std::mt19937_64 rng(derive_seed(seed, kKMeansStream));
    KMeansResult r;
    r.centroids = kmeanspp_init(points, k, rng);

    const auto n = static_cast<std::size_t>(points.rows());
    Assignment a{std::vector<int>(n), std::vector<double>(n)};
    auto objective = [&] { return std::accumulate(a.dist2.begin(), a.dist2.end(), 0.0); };
    assign_points(points, r.centroids, a);
    reseed_empty(points, r.centroids, a);
    r.objective_history.push_back(objective());

    for (int it = 0; it < max_iterations; ++it) {
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums.row(a.cluster[i]) += points.row(static_cast<Eigen::Index>(i));
            ++counts[a.cluster[i]];
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            Eigen::RowVectorXd next = sums.row(c) / static_cast<double>(counts[c]);
            shift = std::max(shift, (next - r.centroids.row(c)).norm());
            r.centroids.row(c) = next;
        }
        ++r.iterations;
        assign_points(points, r.centroids, a);
        reseed_empty(points, r.centroids, a);
        r.objective_history.push_back(objective());
        if (shift < tolerance) {
            r.converged = true;
            break;
        }
    }
    r.assignments = std::move(a.cluster);
    r.objective = r.objective_history.back();
    return r;
}

// ---------------------------------------------------------------------------
// Linear member
// ---------------------------------------------------------------------------

ClusterClassifier fit_linear(const Eigen::MatrixXd& design, std::span<const int> labels, double lambda) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (static_cast<std::size_t>(n) != labels.size()) throw ValidationError("fit_linear: label count mismatch");
    if (p < 1) throw ValidationError("fit_linear: empty design");
    if (lambda < 0) throw ValidationError("fit_linear: lambda must be non-negative");
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    if (positives == 0 || positives == n) throw ValidationError("fit_linear needs both classes");

    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = labels[i] == 1 ? 1.0 : -1.0;

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    Eigen::MatrixXd system = gram;
    system.diagonal().tail(p - 1).array() += lambda;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    if (ldlt.info() != Eigen::Success) throw Error("fit_linear: normal equations could not be factored");
    ClusterClassifier out;
    out.weights = ldlt.solve(design.transpose() * y);
    if (!out.weights.allFinite()) throw Error("fit_linear: singular system (try a positive lambda)");

    const Eigen::Index dof = n - p;
    if (dof >= 1) {
        const Eigen::VectorXd resid = design * out.weights - y;
        const double sigma2 = resid.squaredNorm() / static_cast<double>(dof);
        const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
        const Eigen::MatrixXd cov = sigma2 * (inv * gram * inv);
        out.t_stats.resize(static_cast<std::size_t>(p));
        out.p_values.resize(static_cast<std::size_t>(p));
        for (Eigen::Index j = 0; j < p; ++j) {
            const double se = std::sqrt(std::max(0.0, cov(j, j)));
            double t = 0.0, pv = 1.0;
            if (se > 0.0 && std::isfinite(se)) {
                t = out.weights[j] / se;
                pv = stats::t_two_sided_p(t, static_cast<double>(dof));
            }
            out.t_stats[j] = t;
            out.p_values[j] = pv;
        }
        out.stats_valid = true;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ensemble
// ---------------------------------------------------------------------------

namespace {

/// Folds clusters with fewer than two points into the nearest cluster (by centroid) that
/// still has points, lowest id first.
void merge_small_clusters(std::vector<std::vector<std::size_t>>& clusters, const Eigen::MatrixXd& centroids) {
    for (;;) {
        std::ptrdiff_t small = -1;
        std::size_t nonempty = 0;
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            if (clusters[c].empty()) continue;
            ++nonempty;
            if (small < 0 && clusters[c].size() < 2) small = static_cast<std::ptrdiff_t>(c);
        }
        if (small < 0 || nonempty <= 1) return;
        std::ptrdiff_t target = -1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            if (static_cast<std::ptrdiff_t>(c) == small || clusters[c].empty()) continue;
            double d = (centroids.row(static_cast<Eigen::Index>(c)) - centroids.row(small)).squaredNorm();
            if (d < best) {
                best = d;
                target = static_cast<std::ptrdiff_t>(c);
            }
        }
        auto& from = clusters[small];
        auto& to = clusters[target];
        to.insert(to.end(), from.begin(), from.end());
        std::sort(to.begin(), to.end());
        from.clear();
    }
}

Eigen::MatrixXd design_rows(std::span<const Attributes> z, std::span<const std::size_t> idx) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(kInteractionDim));
    for (std::size_t r = 0; r < idx.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = interaction_map(z[idx[r]]);
    return m;
}

} // namespace

Ensemble train_ensemble(std::span<const Attributes> x, std::span<const int> labels, const TrainOptions& options) {
    if (x.size() != labels.size()) throw ValidationError("train_ensemble: label count mismatch");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    if (pos.empty()) throw ValidationError("train_ensemble: training data has no positive examples");
    if (options.k < 1) throw ValidationError("train_ensemble: k must be >= 1");
    if (neg.size() < static_cast<std::size_t>(options.k))
        throw ValidationError("train_ensemble: " + std::to_string(neg.size()) + " negatives cannot form k=" +
                              std::to_string(options.k) + " clusters");

    Ensemble ens;
    ens.k = options.k;
    ens.lambda = options.lambda;
    ens.seed = options.seed;
    ens.standardization = StandardizationStats::fit(x);

    std::vector<Attributes> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = ens.standardization.apply(x[i]);

    Eigen::MatrixXd neg_points(static_cast<Eigen::Index>(neg.size()), static_cast<Eigen::Index>(kAttributeCount));
    for (std::size_t r = 0; r < neg.size(); ++r)
        for (std::size_t a = 0; a < kAttributeCount; ++a)
            neg_points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) = z[neg[r]][a];
    const auto km = kmeans(neg_points, options.k, options.seed);

    std::vector<std::vector<std::size_t>> clusters(static_cast<std::size_t>(options.k));
    for (std::size_t r = 0; r < neg.size(); ++r) clusters[km.assignments[r]].push_back(neg[r]);
    merge_small_clusters(clusters, km.centroids);

    std::vector<int> ids;
    for (std::size_t c = 0; c < clusters.size(); ++c)
        if (!clusters[c].empty()) ids.push_back(static_cast<int>(c));

    const Eigen::MatrixXd pos_design = design_rows(z, pos);
    ens.members.resize(ids.size());
    parallel_for(ids.size(), [&](std::size_t m) {
        const auto& members = clusters[ids[m]];
        Eigen::MatrixXd design(static_cast<Eigen::Index>(members.size() + pos.size()),
                               static_cast<Eigen::Index>(kInteractionDim));
        design.topRows(static_cast<Eigen::Index>(members.size())) = design_rows(z, members);
        design.bottomRows(pos_design.rows()) = pos_design;
        std::vector<int> y(members.size(), 0);
        y.resize(members.size() + pos.size(), 1);
        auto fitted = fit_linear(design, y, options.lambda);
        fitted.cluster_id = ids[m];
        fitted.cluster_size = members.size();
        ens.members[m] = std::move(fitted);
    });
    std::stable_sort(ens.members.begin(), ens.members.end(), [](const auto& a, const auto& b) {
        if (a.cluster_size != b.cluster_size) return a.cluster_size > b.cluster_size;
        return a.cluster_id < b.cluster_id;
    });
    return ens;
}

Ensemble train_ensemble(std::span<const LabeledExample> train, const TrainOptions& options) {
    std::vector<Attributes> x;
    std::vector<int> y;
    x.reserve(train.size());
    y.reserve(train.size());
    for (const auto& e : train) {
        x.push_back(e.features);
        y.push_back(e.label);
    }
    auto ens = train_ensemble(x, y, options);
    if (!train.empty()) ens.horizon = train.front().horizon;
    return ens;
}

std::vector<double> member_outputs(const Ensemble& ensemble, const Attributes& x) {
    const auto phi = interaction_map(ensemble.standardization.apply(x));
    std::vector<double> out;
    out.reserve(ensemble.members.size());
    for (const auto& m : ensemble.members) out.push_back(m.output(phi));
    return out;
}

double predict(const Ensemble& ensemble, const Attributes& x, std::optional<std::size_t> prune_m) {
    const std::size_t m = prune_m.value_or(ensemble.members.size());
    if (m < 1 || m > ensemble.members.size())
        throw ValidationError("prune_m must be in [1, " + std::to_string(ensemble.members.size()) + "]");
    const auto phi = interaction_map(ensemble.standardization.apply(x));
    double best = ensemble.members[0].output(phi);
    for (std::size_t i = 1; i < m; ++i) best = std::max(best, ensemble.members[i].output(phi));
    return best;
}

std::vector<double> predict_all(const Ensemble& ensemble, std::span<const LabeledExample> examples,
                                std::optional<std::size_t> prune_m) {
    std::vector<double> scores(examples.size());
    parallel_for(examples.size(), [&](std::size_t i) { scores[i] = predict(ensemble, examples[i].features, prune_m); });
    return scores;
}

ImportanceReport attribute_importance(const Ensemble& ensemble, double alpha, double fraction_threshold) {
    ImportanceReport rep;
    rep.alpha = alpha;
    rep.threshold = fraction_threshold;
    rep.per_term_alpha = alpha / static_cast<double>(kInteractionDim);
    const auto terms = interaction_terms(kAttributeCount);
    std::array<std::size_t, kAttributeCount> credited{};
    for (const auto& m : ensemble.members) {
        if (!m.stats_valid || m.p_values.size() != kInteractionDim) continue;
        ++rep.stats_valid_members;
        std::array<bool, kAttributeCount> hit{};
        for (std::size_t t = 1; t < kInteractionDim; ++t) {
            if (!(m.p_values[t] < rep.per_term_alpha)) continue;
            hit[terms[t].first] = true;
            if (terms[t].second >= 0) hit[terms[t].second] = true;
        }
        for (std::size_t a = 0; a < kAttributeCount; ++a) credited[a] += hit[a];
    }
    if (rep.stats_valid_members == 0)
        throw Error("attribute importance needs at least one member with valid statistics");
    for (std::size_t a = 0; a < kAttributeCount; ++a) {
        rep.credited_fraction[a] = static_cast<double>(credited[a]) / static_cast<double>(rep.stats_valid_members);
        if (rep.credited_fraction[a] >= fraction_threshold) rep.influential.push_back(a);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

nlohmann::ordered_json model_to_json(const Ensemble& e) {
    nlohmann::ordered_json j;
    j["format"] = "recall-sentinel-model";
    j["version"] = 1;
    j["k"] = e.k;
    j["seed"] = e.seed;
    j["lambda"] = e.lambda;
    j["horizon"] = e.horizon;
    j["train_end_day"] = e.train_end_day;
    j["attributes"] = attribute_names();
    j["standardization"]["mean"] = e.standardization.mean;
    j["standardization"]["std"] = e.standardization.stddev;
    j["members"] = nlohmann::ordered_json::array();
    for (const auto& m : e.members) {
        nlohmann::ordered_json mj;
        mj["cluster_id"] = m.cluster_id;
        mj["cluster_size"] = m.cluster_size;
        mj["stats_valid"] = m.stats_valid;
        mj["weights"] = std::vector<double>(m.weights.data(), m.weights.data() + m.weights.size());
        if (m.stats_valid) mj["p_values"] = m.p_values;
        j["members"].push_back(std::move(mj));
    }
    return j;
}

Ensemble model_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", "") != "recall-sentinel-model") throw ParseError("not a recall-sentinel model");
        Ensemble e;
        e.k = j.at("k").get<int>();
        e.seed = j.at("seed").get<std::uint64_t>();
        e.lambda = j.at("lambda").get<double>();
        e.horizon = j.value("horizon", 0);
        e.train_end_day = j.value("train_end_day", 0);
        e.standardization.mean = j.at("standardization").at("mean").get<Attributes>();
        e.standardization.stddev = j.at("standardization").at("std").get<Attributes>();
        for (const auto& mj : j.at("members")) {
            ClusterClassifier m;
            m.cluster_id = mj.at("cluster_id").get<int>();
            m.cluster_size = mj.at("cluster_size").get<std::size_t>();
            m.stats_valid = mj.at("stats_valid").get<bool>();
            auto w = mj.at("weights").get<std::vector<double>>();
            if (w.size() != kInteractionDim)
                throw ParseError("member weights must have " + std::to_string(kInteractionDim) + " entries");
            m.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
            if (m.stats_valid) m.p_values = mj.at("p_values").get<std::vector<double>>();
            e.members.push_back(std::move(m));
        }
        if (e.members.empty()) throw ParseError("model has no members");
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError(std::string("malformed model: ") + ex.what());
    }
}

void write_model(std::ostream& out, const Ensemble& ensemble) { out << model_to_json(ensemble).dump(1) << '\n'; }

Ensemble read_model(std::istream& in) {
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ParseError("model file is not valid JSON");
    return model_from_json(j);
}

} // namespace sentinel
