#include "sentinel/cli.hpp"
#include "sentinel/eval.hpp"
#include "sentinel/features.hpp"
#include "sentinel/lexicon.hpp"
#include "sentinel/model.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

namespace py = pybind11;
using namespace sentinel;

namespace {

py::dict regression_dict(const RankRegressionResult& r) {
    py::list coefs;
    for (const auto& c : r.coefficients) {
        py::dict d;
        d["name"] = c.name;
        d["slope"] = c.slope;
        d["std_error"] = c.std_error;
        d["t_value"] = c.t_value;
        d["p_value"] = c.p_value;
        coefs.append(d);
    }
    py::dict d;
    d["intercept"] = r.intercept;
    d["coefficients"] = coefs;
    d["r_squared"] = r.r_squared;
    d["f_statistic"] = r.f_statistic;
    d["model_p_value"] = r.model_p_value;
    d["n"] = r.n;
    return d;
}

Attributes to_attributes(const std::vector<double>& v) {
    if (v.size() != kAttributeCount)
        throw ValidationError("expected " + std::to_string(kAttributeCount) + " attributes, got " +
                              std::to_string(v.size()));
    Attributes a;
    std::copy(v.begin(), v.end(), a.begin());
    return a;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Query-signal drug recall prediction";

    // Translators are tried newest first, so the base class goes first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    m.attr("ATTRIBUTE_COUNT") = kAttributeCount;
    m.attr("INTERACTION_DIM") = kInteractionDim;
    m.attr("attribute_names") = attribute_names();

    m.def("normalize_text", [](const std::string& s) { return normalize_text(s); }, py::arg("text"));

    m.def("window_slope", [](const std::vector<double>& counts, int weeks) { return window_slope(counts, weeks); },
          py::arg("counts"), py::arg("weeks"));
    m.def(
        "spike_ratio",
        [](const std::vector<double>& counts, int short_days, int long_days, double alpha) {
            return spike_ratio(counts, short_days, long_days, alpha);
        },
        py::arg("counts"), py::arg("short_days"), py::arg("long_days"), py::arg("alpha") = kRatioSmoothing);

    m.def(
        "roc_auc",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            const auto r = roc_auc(scores, labels);
            std::vector<std::pair<double, double>> pts;
            for (const auto& p : r.points) pts.emplace_back(p.fpr, p.tpr);
            return std::make_pair(r.auc, pts);
        },
        py::arg("scores"), py::arg("labels"), "Returns (auc, [(fpr, tpr), ...]).");
    m.def(
        "lift_at",
        [](const std::vector<double>& scores, const std::vector<int>& labels, double fraction) {
            return lift_at(scores, labels, fraction).lift;
        },
        py::arg("scores"), py::arg("labels"), py::arg("fraction") = 0.05);
    m.def(
        "spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) {
            const auto r = spearman(x, y);
            return std::make_pair(r.rho, r.p_value);
        },
        py::arg("x"), py::arg("y"), "Returns (rho, p_value).");
    m.def(
        "rank_regression",
        [](const std::vector<double>& y, const std::vector<std::vector<double>>& predictors,
           const std::vector<std::string>& names) { return regression_dict(rank_regression(y, predictors, names)); },
        py::arg("y"), py::arg("predictors"), py::arg("names") = std::vector<std::string>{});

    m.def(
        "interaction_map", [](const std::vector<double>& x) { return interaction_map(x); }, py::arg("x"));
    m.def(
        "kmeans",
        [](const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iterations) {
            const auto r = kmeans(points, k, seed, max_iterations);
            py::dict d;
            d["centroids"] = r.centroids;
            d["assignments"] = r.assignments;
            d["objective"] = r.objective;
            d["objective_history"] = r.objective_history;
            d["iterations"] = r.iterations;
            d["converged"] = r.converged;
            return d;
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("max_iterations") = 100);

    py::class_<Ensemble>(m, "Ensemble")
        .def_static(
            "load",
            [](const std::string& path) {
                std::ifstream in(path);
                if (!in) throw Error("cannot open model file: " + path);
                return read_model(in);
            },
            py::arg("path"))
        .def_readonly("k", &Ensemble::k)
        .def_readonly("horizon", &Ensemble::horizon)
        .def_property_readonly("members", [](const Ensemble& e) { return e.members.size(); })
        .def(
            "predict",
            [](const Ensemble& e, const std::vector<double>& x, std::optional<std::size_t> prune_m) {
                return predict(e, to_attributes(x), prune_m);
            },
            py::arg("x"), py::arg("prune_m") = py::none());

    m.def(
        "run_command",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int status;
            {
                py::gil_scoped_release release;
                status = run_command(args, out, err);
            }
            return py::make_tuple(status, out.str(), err.str());
        },
        py::arg("args"), "Runs one recall-sentinel subcommand; returns (status, stdout, stderr).");
}
