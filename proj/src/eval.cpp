#include "sentinel/eval.hpp"

#include "sentinel/parallel.hpp"
#include "sentinel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sentinel {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
    for (double s : scores)
        if (std::isnan(s)) throw ValidationError("scores contain NaN");
    for (int l : labels)
        if (l != 0 && l != 1) throw ValidationError("labels must be 0 or 1");
}

} // namespace

std::vector<std::size_t> rank_descending(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
    return order;
}

std::size_t top_count(double fraction, std::size_t n) {
    const double x = fraction * static_cast<double>(n);
    auto c = static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
    return std::clamp<std::size_t>(c, 1, std::max<std::size_t>(n, 1));
}

RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw ValidationError("ROC needs both positive and negative examples");

    const auto order = rank_descending(scores);
    RocResult r;
    r.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    double area2 = 0.0;  // twice the area in (fp, tp) count units
    for (std::size_t i = 0; i < order.size();) {
        const std::size_t tp0 = tp, fp0 = fp;
        std::size_t j = i;
        for (; j < order.size() && scores[order[j]] == scores[order[i]]; ++j) (labels[order[j]] ? tp : fp)++;
        area2 += static_cast<double>(fp - fp0) * static_cast<double>(tp + tp0);
        r.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos)});
        i = j;
    }
    r.auc = area2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
    return r;
}

LiftResult lift_at(std::span<const double> scores, std::span<const int> labels, double fraction, bool with_curve) {
    check_inputs(scores, labels);
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("lift fraction must be in (0, 1]");
    const std::size_t n = labels.size();
    const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    if (pos == 0) throw ValidationError("lift is undefined without positive examples");

    const auto order = rank_descending(scores);
    std::vector<std::size_t> cum(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + static_cast<std::size_t>(labels[order[i]]);
    auto lift_for = [&](std::size_t n_top) {
        return static_cast<double>(cum[n_top]) * static_cast<double>(n) /
               (static_cast<double>(n_top) * static_cast<double>(pos));
    };

    LiftResult r;
    r.fraction = fraction;
    r.n_top = top_count(fraction, n);
    r.positives_in_top = cum[r.n_top];
    r.lift = lift_for(r.n_top);
    if (with_curve)
        for (int i = 1; i <= 100; ++i) {
            const double t = i / 100.0;
            r.curve.emplace_back(t, lift_for(top_count(t, n)));
        }
    return r;
}

RankRegressionResult rank_regression(std::span<const double> y, const std::vector<std::vector<double>>& predictors,
                                     const std::vector<std::string>& names) {
    const std::size_t n = y.size();
    const std::size_t p = predictors.size();
    if (p == 0) throw ValidationError("rank regression needs at least one predictor");
    if (n < p + 2)
        throw ValidationError("rank regression with " + std::to_string(p) + " predictor(s) needs at least " +
                              std::to_string(p + 2) + " observations");
    for (const auto& col : predictors)
        if (col.size() != n) throw ValidationError("predictor length differs from response length");

    const auto ry = stats::average_ranks(y);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p + 1));
    X.col(0).setOnes();
    for (std::size_t j = 0; j < p; ++j) {
        const auto r = stats::average_ranks(predictors[j]);
        for (std::size_t i = 0; i < n; ++i) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = r[i];
    }
    Eigen::Map<const Eigen::VectorXd> yv(ry.data(), static_cast<Eigen::Index>(n));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(p + 1))
        throw ValidationError("rank regression: a ranked predictor is constant or collinear");
    const Eigen::VectorXd beta = qr.solve(yv);

    const double ybar = yv.mean();
    const double sst = (yv.array() - ybar).square().sum();
    if (!(sst > 0.0)) throw ValidationError("rank regression: response is constant");
    const Eigen::VectorXd resid = yv - X * beta;
    const double sse = resid.squaredNorm();
    const double dof = static_cast<double>(n - p - 1);
    const double sigma2 = sse / dof;
    const Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();

    RankRegressionResult out;
    out.n = n;
    out.intercept = beta[0];
    for (std::size_t j = 0; j < p; ++j) {
        Coefficient c;
        c.name = j < names.size() ? names[j] : "x" + std::to_string(j + 1);
        c.slope = beta[static_cast<Eigen::Index>(j + 1)];
        c.std_error = std::sqrt(std::max(0.0, sigma2 * xtx_inv(static_cast<Eigen::Index>(j + 1),
                                                                static_cast<Eigen::Index>(j + 1))));
        if (c.std_error > 0.0) {
            c.t_value = c.slope / c.std_error;
        } else {
            c.t_value = c.slope == 0.0 ? 0.0 : std::copysign(INFINITY, c.slope);
        }
        c.p_value = stats::t_two_sided_p(c.t_value, dof);
        out.coefficients.push_back(std::move(c));
    }
    // Perfect rank fits leave residuals of pure rounding noise.
    const double sse_eff = sse <= 1e-20 * sst ? 0.0 : sse;
    out.r_squared = 1.0 - sse_eff / sst;
    const double ssr = sst - sse_eff;
    out.f_statistic = sse_eff == 0.0 ? INFINITY : (ssr / static_cast<double>(p)) / (sse_eff / dof);
    out.model_p_value = stats::f_upper_p(out.f_statistic, static_cast<double>(p), dof);
    return out;
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("spearman: inputs differ in length");
    const std::size_t n = x.size();
    if (n < 3) throw ValidationError("spearman needs at least 3 observations");
    const auto rx = stats::average_ranks(x);
    const auto ry = stats::average_ranks(y);
    const double mx = stats::mean(rx), my = stats::mean(ry);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw ValidationError("spearman is undefined for a constant input");
    SpearmanResult r;
    r.n = n;
    r.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double denom = 1.0 - r.rho * r.rho;
    r.p_value = denom <= 0.0 ? 0.0
                             : stats::t_two_sided_p(r.rho * std::sqrt(static_cast<double>(n - 2) / denom),
                                                    static_cast<double>(n - 2));
    return r;
}

StrataReport strata_analysis(std::span<const LabeledExample> examples, std::span<const double> scores,
                             double fraction) {
    if (examples.size() != scores.size()) throw ValidationError("strata: scores and examples differ in length");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("strata fraction must be in (0, 1]");
    const auto order = rank_descending(scores);
    const std::size_t n_top = top_count(fraction, examples.size());
    std::vector<bool> in_top(examples.size(), false);
    for (std::size_t i = 0; i < n_top && i < order.size(); ++i) in_top[order[i]] = true;

    StrataReport rep;
    rep.fraction = fraction;
    std::array<std::size_t, 3> cls_all{}, cls_top{}, rx_all{}, rx_top{};
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& e = examples[i];
        if (e.label != 1) continue;
        if (!e.classification || !e.rx_otc)
            throw ValidationError("positive example " + e.drug + "/" + e.state + "/" + std::to_string(e.day) +
                                  " lacks recall metadata");
        ++rep.positives;
        const auto c = static_cast<std::size_t>(*e.classification);
        const auto r = static_cast<std::size_t>(*e.rx_otc);
        ++cls_all[c];
        ++rx_all[r];
        if (in_top[i]) {
            ++rep.positives_in_top;
            ++cls_top[c];
            ++rx_top[r];
        }
    }
    if (rep.positives == 0) throw ValidationError("strata analysis needs positive examples");

    auto fill = [&](std::vector<Stratum>& out, const auto& all, const auto& top, auto names) {
        for (std::size_t s = 0; s < all.size(); ++s) {
            Stratum st;
            st.name = names[s];
            st.overall_count = all[s];
            st.top_count = top[s];
            st.overall_share = static_cast<double>(all[s]) / static_cast<double>(rep.positives);
            if (rep.positives_in_top > 0)
                st.top_share = static_cast<double>(top[s]) / static_cast<double>(rep.positives_in_top);
            if (all[s] > 0 && st.top_share) st.relative_likelihood = *st.top_share / *st.overall_share - 1.0;
            out.push_back(std::move(st));
        }
    };
    fill(rep.recall_class, cls_all, cls_top, std::array<const char*, 3>{"I", "II", "III"});
    fill(rep.rx_otc, rx_all, rx_top, std::array<const char*, 3>{"RX", "OTC", "UNCLASSIFIED"});
    return rep;
}

std::vector<PrunePoint> prune_sweep(const Ensemble& ensemble, std::span<const LabeledExample> examples,
                                    std::span<const std::size_t> m_grid, double fraction) {
    const std::size_t members = ensemble.members.size();
    for (auto m : m_grid)
        if (m < 1 || m > members)
            throw ValidationError("prune grid value " + std::to_string(m) + " outside [1, " + std::to_string(members) +
                                  "]");
    std::vector<std::vector<double>> outputs(examples.size());
    parallel_for(examples.size(), [&](std::size_t i) { outputs[i] = member_outputs(ensemble, examples[i].features); });
    std::vector<int> labels;
    for (const auto& e : examples) labels.push_back(e.label);

    std::vector<PrunePoint> curve;
    std::vector<double> scores(examples.size());
    for (auto m : m_grid) {
        for (std::size_t i = 0; i < examples.size(); ++i)
            scores[i] = *std::max_element(outputs[i].begin(), outputs[i].begin() + static_cast<std::ptrdiff_t>(m));
        curve.push_back({m, lift_at(scores, labels, fraction).lift});
    }
    return curve;
}

ClusterUsage cluster_usage(const Ensemble& ensemble, std::span<const LabeledExample> examples) {
    ClusterUsage u;
    for (const auto& m : ensemble.members) u.sizes.push_back(m.cluster_size);
    u.wins.assign(ensemble.members.size(), 0);
    std::vector<std::size_t> winner(examples.size());
    parallel_for(examples.size(), [&](std::size_t i) {
        const auto out = member_outputs(ensemble, examples[i].features);
        winner[i] = static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
    });
    for (auto w : winner) ++u.wins[w];
    if (u.sizes.size() >= 3) {
        std::vector<double> s(u.sizes.begin(), u.sizes.end()), w(u.wins.begin(), u.wins.end());
        try {
            u.correlation = spearman(s, w);
        } catch (const ValidationError&) {
        }
    }
    return u;
}

TrainedRun run_horizon(std::span<const FeatureRow> censored_rows, std::span<const RecallRecord> recalls,
                       const PipelineSettings& settings, int horizon) {
    auto examples = label_examples(censored_rows, recalls, horizon, settings.study_days, settings.max_horizon);
    examples = post_recall_exclusion(std::move(examples), recalls);
    TrainedRun run;
    run.split = split_by_time(std::move(examples), settings.train_end_day, settings.study_days);
    run.ensemble = train_ensemble(run.split.train, TrainOptions{settings.k, settings.lambda, settings.seed});
    run.ensemble.horizon = horizon;
    run.ensemble.train_end_day = settings.train_end_day;
    run.test_scores = predict_all(run.ensemble, run.split.test);
    return run;
}

HorizonSweepResult horizon_sweep(std::span<const FeatureRow> censored_rows, std::span<const RecallRecord> recalls,
                                 const PipelineSettings& settings, std::span<const int> horizons) {
    HorizonSweepResult res;
    for (int n : horizons) {
        if (n < 1 || n > settings.max_horizon)
            throw ValidationError("horizon grid value " + std::to_string(n) + " outside [1, " +
                                  std::to_string(settings.max_horizon) + "]");
        auto run = run_horizon(censored_rows, recalls, settings, n);
        std::vector<int> labels;
        for (const auto& e : run.split.test) labels.push_back(e.label);
        HorizonRow row;
        row.horizon = n;
        row.n_test = labels.size();
        row.positives_in_test = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
        row.auc = roc_auc(run.test_scores, labels).auc;
        row.lift = lift_at(run.test_scores, labels, settings.lift_fraction).lift;
        res.rows.push_back(row);
    }
    std::vector<double> ns, pos, aucs, lifts;
    for (const auto& r : res.rows) {
        ns.push_back(r.horizon);
        pos.push_back(static_cast<double>(r.positives_in_test));
        aucs.push_back(r.auc);
        lifts.push_back(r.lift);
    }
    const std::vector<std::string> names{"time_to_recall", "positives_in_test"};
    try {
        res.auc_model = rank_regression(aucs, {ns, pos}, names);
        res.lift_model = rank_regression(lifts, {ns, pos}, names);
    } catch (const ValidationError& e) {
        res.regression_note = e.what();
    }
    return res;
}

EvalReport evaluate_model(const Ensemble& ensemble, std::span<const LabeledExample> test, double lift_fraction,
                          std::optional<std::size_t> prune_m) {
    EvalReport rep;
    rep.horizon = ensemble.horizon;
    rep.prune_m = prune_m;
    rep.n_test = test.size();
    const auto scores = predict_all(ensemble, test, prune_m);
    std::vector<int> labels;
    for (const auto& e : test) labels.push_back(e.label);
    rep.positives_in_test = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    rep.roc = roc_auc(scores, labels);
    rep.lift = lift_at(scores, labels, lift_fraction, true);
    rep.strata = strata_analysis(test, scores, lift_fraction);
    try {
        rep.importance = attribute_importance(ensemble);
    } catch (const Error&) {
    }
    rep.usage = cluster_usage(ensemble, test);
    return rep;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json opt(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json strata_json(const std::vector<Stratum>& strata) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : strata) {
        nlohmann::ordered_json j;
        j["stratum"] = s.name;
        j["overall_count"] = s.overall_count;
        j["top_count"] = s.top_count;
        j["overall_share"] = opt(s.overall_share);
        j["top_share"] = opt(s.top_share);
        j["relative_likelihood"] = opt(s.relative_likelihood);
        arr.push_back(std::move(j));
    }
    return arr;
}

} // namespace

nlohmann::ordered_json to_json(const RankRegressionResult& r) {
    nlohmann::ordered_json j;
    j["n"] = r.n;
    j["intercept"] = r.intercept;
    j["coefficients"] = nlohmann::ordered_json::array();
    for (const auto& c : r.coefficients)
        j["coefficients"].push_back({{"predictor", c.name},
                                     {"slope", c.slope},
                                     {"std_error", c.std_error},
                                     {"t", std::isfinite(c.t_value) ? nlohmann::ordered_json(c.t_value)
                                                                    : nlohmann::ordered_json(nullptr)},
                                     {"p_value", c.p_value}});
    j["r_squared"] = r.r_squared;
    j["f_statistic"] = std::isfinite(r.f_statistic) ? nlohmann::ordered_json(r.f_statistic)
                                                    : nlohmann::ordered_json(nullptr);
    j["model_p_value"] = r.model_p_value;
    return j;
}

nlohmann::ordered_json to_json(const StrataReport& r) {
    nlohmann::ordered_json j;
    j["fraction"] = r.fraction;
    j["positives"] = r.positives;
    j["positives_in_top"] = r.positives_in_top;
    j["recall_class"] = strata_json(r.recall_class);
    j["rx_otc"] = strata_json(r.rx_otc);
    return j;
}

nlohmann::ordered_json to_json(const ImportanceReport& r) {
    nlohmann::ordered_json j;
    j["alpha"] = r.alpha;
    j["per_term_alpha"] = r.per_term_alpha;
    j["threshold"] = r.threshold;
    j["stats_valid_members"] = r.stats_valid_members;
    j["credited_fraction"] = nlohmann::ordered_json::object();
    for (std::size_t a = 0; a < kAttributeCount; ++a) j["credited_fraction"][attribute_names()[a]] = r.credited_fraction[a];
    j["influential"] = nlohmann::ordered_json::array();
    for (auto a : r.influential) j["influential"].push_back(attribute_names()[a]);
    return j;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["horizon"] = r.horizon;
    j["prune_m"] = r.prune_m ? nlohmann::ordered_json(*r.prune_m) : nlohmann::ordered_json(nullptr);
    j["n_test"] = r.n_test;
    j["positives_in_test"] = r.positives_in_test;
    j["auc"] = r.roc.auc;
    j["lift_fraction"] = r.lift.fraction;
    j["lift"] = r.lift.lift;
    j["lift_top_count"] = r.lift.n_top;
    j["lift_positives_in_top"] = r.lift.positives_in_top;
    j["strata"] = to_json(r.strata);
    j["importance"] = r.importance ? to_json(*r.importance) : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json usage;
    usage["cluster_sizes"] = r.usage.sizes;
    usage["max_wins"] = r.usage.wins;
    if (r.usage.correlation)
        usage["spearman"] = {{"rho", r.usage.correlation->rho}, {"p_value", r.usage.correlation->p_value}};
    else
        usage["spearman"] = nullptr;
    j["cluster_usage"] = std::move(usage);
    return j;
}

nlohmann::ordered_json to_json(const HorizonSweepResult& r) {
    nlohmann::ordered_json j;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : r.rows)
        j["rows"].push_back({{"horizon", row.horizon},
                             {"auc", row.auc},
                             {"lift", row.lift},
                             {"positives_in_test", row.positives_in_test},
                             {"n_test", row.n_test}});
    j["auc_regression"] = r.auc_model ? to_json(*r.auc_model) : nlohmann::ordered_json(nullptr);
    j["lift_regression"] = r.lift_model ? to_json(*r.lift_model) : nlohmann::ordered_json(nullptr);
    if (!r.regression_note.empty()) j["regression_note"] = r.regression_note;
    return j;
}

} // namespace sentinel
