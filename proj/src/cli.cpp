#include "sentinel/cli.hpp"

#include "sentinel/charts.hpp"
#include "sentinel/config.hpp"
#include "sentinel/convert.hpp"
#include "sentinel/csv.hpp"
#include "sentinel/digest.hpp"
#include "sentinel/eval.hpp"
#include "sentinel/features.hpp"
#include "sentinel/ingest.hpp"
#include "sentinel/labeling.hpp"
#include "sentinel/lexicon.hpp"
#include "sentinel/model.hpp"
#include "sentinel/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

namespace sentinel {

namespace {

namespace fs = std::filesystem;

struct Flags {
    std::string config, out;
    int horizon = 0, k = 0, train_end_day = 0;
    double lambda = 0, lift_fraction = 0;
    std::uint64_t seed = 0, min_queries = 0;
    std::size_t prune = 0;
    std::vector<int> horizons;
    std::string drugs, symptoms, queries, cube, recalls, features, model, openfda, input;

    double gamma = 0, symptom_boost = 0, nationwide_probability = 0;
    int injection_days = 0, n_drugs = 0, n_states = 0, n_days = 0, n_recalls = 0;
    std::string ramp;
    bool query_log = false;
};

/// One subcommand invocation: resolved configuration plus the files it touched.
class Session {
public:
    Session(std::string command, RunConfig config, std::ostream& out)
        : command_(std::move(command)), cfg_(std::move(config)), out_(out) {}

    RunConfig& config() { return cfg_; }
    std::ostream& out() { return out_; }
    const fs::path& out_dir() const { return cfg_.paths.out; }

    fs::path path(const fs::path& configured, const char* default_name) const {
        return cfg_.resolve(configured, default_name);
    }

    std::string read(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw ValidationError("cannot open " + p.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        inputs_[p.filename().string()] = sha256_hex(buf.str());
        return buf.str();
    }

    /// Parses a file through `fn`, prefixing parse failures with the file name.
    template <class Fn>
    auto load(const fs::path& p, Fn fn) {
        std::istringstream in(read(p));
        try {
            return fn(in);
        } catch (const ParseError& e) {
            throw ParseError(p.string() + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(p.string() + ": " + e.what());
        }
    }

    void write(const fs::path& p, const std::string& content) {
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + p.string());
        f << content;
        if (!f.flush()) throw Error("failed writing " + p.string());
        outputs_[p.filename().string()] = sha256_hex(content);
    }

    template <class Fn>
    void write_with(const fs::path& p, Fn fn) {
        std::ostringstream o;
        fn(o);
        write(p, o.str());
    }

    void write_manifest() {
        const auto file = out_dir() / "manifest.json";
        nlohmann::json manifest = nlohmann::json::object();
        if (std::ifstream in(file); in) {
            auto j = nlohmann::json::parse(in, nullptr, false);
            if (!j.is_discarded() && j.is_object()) manifest = std::move(j);
        }
        nlohmann::json entry;
        entry["config_hash"] = sha256_hex(cfg_.to_json(out_dir()).dump());
        entry["seed"] = cfg_.seed;
        entry["inputs"] = inputs_;
        entry["outputs"] = outputs_;
        manifest[command_] = std::move(entry);
        fs::create_directories(out_dir());
        std::ofstream f(file, std::ios::binary | std::ios::trunc);
        f << manifest.dump(2) << '\n';
    }

private:
    std::string command_;
    RunConfig cfg_;
    std::ostream& out_;
    std::map<std::string, std::string> inputs_, outputs_;
};

void write_row_errors(Session& s, const fs::path& p, const std::vector<RowError>& errors) {
    s.write_with(p, [&](std::ostream& o) {
        o << "line,reason\n";
        for (const auto& e : errors) o << e.line << ',' << csv::escape(e.reason) << '\n';
    });
}

void write_recalls_per_state(Session& s, const std::vector<RecallRecord>& recalls) {
    s.write_with(s.out_dir() / "recalls_per_state.csv", [&](std::ostream& o) {
        o << "state,recalls\n";
        for (const auto& [state, n] : recalls_per_state(recalls, s.config().calendar)) o << state << ',' << n << '\n';
    });
}

DrugLexicon load_drugs(Session& s) {
    return s.load(s.path(s.config().paths.drugs, "drugs.csv"), [](std::istream& in) { return read_drug_lexicon(in); });
}

std::vector<RecallRecord> load_recalls(Session& s, bool write_rejects = true) {
    const auto p = s.path(s.config().paths.recalls, "recalls.jsonl");
    auto parsed = s.load(p, [&](std::istream& in) { return parse_recall_file(in, s.config().calendar); });
    if (!parsed.errors.empty()) {
        s.out() << p.string() << ": " << parsed.errors.size() << " recall rows rejected\n";
        if (write_rejects) write_row_errors(s, s.out_dir() / "recall_errors.csv", parsed.errors);
    }
    return std::move(parsed.records);
}

std::vector<FeatureRow> load_features(Session& s) {
    return s.load(s.path(s.config().paths.features, "features.csv"),
                  [](std::istream& in) { return read_feature_csv(in); });
}

Ensemble load_model(Session& s, const fs::path& p) {
    return s.load(p, [](std::istream& in) { return read_model(in); });
}

std::vector<LabeledExample> label_for(const RunConfig& cfg, std::span<const FeatureRow> rows,
                                      std::span<const RecallRecord> recalls, int horizon) {
    return post_recall_exclusion(label_examples(rows, recalls, horizon, cfg.calendar.n_days, cfg.max_horizon),
                                 recalls);
}

std::string fmt(double v) {
    std::ostringstream o;
    o.precision(4);
    o << std::fixed << v;
    return o.str();
}

// Desk-scale training defaults written into the config that `synth` emits.
constexpr int kDeskK = 10;
constexpr double kDeskLambda = 100.0;

// ---------------------------------------------------------------------------------------------

void cmd_synth(Session& s, const Flags& f, const CLI::App& app, const CLI::App& sub) {
    auto& cfg = s.config();
    SynthConfig sc = cfg.synth;
    if (app.count("--seed")) sc.seed = f.seed;
    if (sub.count("--gamma")) sc.gamma = f.gamma;
    if (sub.count("--injection-days")) sc.injection_days = f.injection_days;
    if (sub.count("--ramp")) sc.ramp = f.ramp == "linear" ? RampShape::Linear : RampShape::Flat;
    if (sub.count("--n-drugs")) sc.n_drugs = f.n_drugs;
    if (sub.count("--n-states")) sc.n_states = f.n_states;
    if (sub.count("--n-days")) sc.n_days = f.n_days;
    if (sub.count("--n-recalls")) sc.n_recalls = f.n_recalls;
    if (sub.count("--symptom-boost")) sc.symptom_boost = f.symptom_boost;
    if (sub.count("--nationwide-probability")) sc.nationwide_probability = f.nationwide_probability;
    sc.validate();

    const auto synth = generate(sc);
    const auto& dir = s.out_dir();

    s.write_with(dir / "drugs.csv", [&](std::ostream& o) { write_drug_lexicon(o, synth.drugs); });
    s.write_with(dir / "symptoms.txt", [&](std::ostream& o) { write_symptom_lexicon(o, synth.symptoms); });
    s.write_with(dir / "recalls.jsonl", [&](std::ostream& o) { write_recall_file(o, synth.recalls); });
    s.write(dir / "truth.json", truth_to_json(synth.truth).dump(2) + "\n");
    if (f.query_log) {
        const auto log = expand_query_log(synth, sc.seed);
        s.write_with(dir / "queries.jsonl", [&](std::ostream& o) { write_query_log(o, log); });
    } else {
        s.write_with(dir / "cube.csv", [&](std::ostream& o) { write_cube_csv(o, synth.cube); });
    }

    // A config that drives the rest of the pipeline over these files.
    RunConfig run = cfg;
    run.calendar = synth.calendar;
    run.synth = sc;
    run.seed = sc.seed;
    if (!app.count("--k")) run.k = kDeskK;
    if (!app.count("--lambda")) run.lambda = kDeskLambda;
    run.paths = {};
    run.paths.out = dir;
    run.paths.drugs = dir / "drugs.csv";
    run.paths.symptoms = dir / "symptoms.txt";
    run.paths.recalls = dir / "recalls.jsonl";
    (f.query_log ? run.paths.queries : run.paths.cube) = dir / (f.query_log ? "queries.jsonl" : "cube.csv");
    s.write(dir / "config.json", run.to_json(dir).dump(2) + "\n");
    cfg = run;

    s.out() << "synth: " << synth.drugs.size() << " drugs x " << synth.calendar.states.size() << " states x "
            << synth.calendar.n_days << " days, " << synth.recalls.size() << " recalls -> " << dir.string() << "\n";
}

void cmd_ingest(Session& s) {
    auto& cfg = s.config();
    const auto drugs = load_drugs(s);
    const auto queries = s.path(cfg.paths.queries, "queries.jsonl");
    CountCube cube;
    if (!cfg.paths.queries.empty() || fs::exists(queries)) {
        const auto symptoms = s.load(s.path(cfg.paths.symptoms, "symptoms.txt"),
                                     [](std::istream& in) { return read_symptom_lexicon(in); });
        auto parsed = s.load(queries, [&](std::istream& in) { return parse_query_log(in, cfg.calendar); });
        cube = build_count_cube(parsed.records, drugs, symptoms, cfg.calendar);
        s.out() << "ingest: " << parsed.records.size() << " queries accepted, " << parsed.errors.size()
                << " rejected\n";
        if (!parsed.errors.empty()) write_row_errors(s, cfg.paths.out / "ingest_errors.csv", parsed.errors);
    } else {
        const auto cube_in = s.path(cfg.paths.cube, "cube.csv");
        if (!fs::exists(cube_in)) throw ValidationError("no query log or count cube to ingest: " + queries.string());
        cube = s.load(cube_in, [&](std::istream& in) { return read_cube_csv(in, cfg.calendar, &drugs); });
        s.out() << "ingest: loaded count cube " << cube_in.string() << "\n";
    }
    s.write_with(cfg.paths.out / "cube.csv", [&](std::ostream& o) { write_cube_csv(o, cube); });
    s.out() << "ingest: " << cube.drugs().size() << " drugs with matched queries\n";

    if (const auto r = s.path(cfg.paths.recalls, "recalls.jsonl"); !cfg.paths.recalls.empty() || fs::exists(r))
        write_recalls_per_state(s, load_recalls(s));
}

void cmd_featurize(Session& s) {
    auto& cfg = s.config();
    const DrugLexicon drugs = cfg.paths.drugs.empty() && !fs::exists(s.path({}, "drugs.csv")) ? DrugLexicon{} : load_drugs(s);
    const auto cube = s.load(s.path(cfg.paths.cube, "cube.csv"), [&](std::istream& in) {
        return read_cube_csv(in, cfg.calendar, drugs.size() ? &drugs : nullptr);
    });
    const auto kept = filter_drugs(cube, cfg.min_queries);
    const auto recalls = load_recalls(s);
    auto rows = apply_censoring(extract_all_features(kept), recalls);
    s.write_with(cfg.paths.out / "features.csv", [&](std::ostream& o) { write_feature_csv(o, rows); });
    s.out() << "featurize: " << kept.drugs().size() << " of " << cube.drugs().size() << " drugs kept (min_queries "
            << cfg.min_queries << "), " << rows.size() << " feature rows\n";
}

void cmd_train(Session& s) {
    auto& cfg = s.config();
    const auto rows = load_features(s);
    const auto recalls = load_recalls(s);
    auto labeled = label_for(cfg, rows, recalls, cfg.horizon);
    auto split = split_by_time(labeled, cfg.train_end_day, cfg.calendar.n_days);
    auto ens = train_ensemble(split.train, TrainOptions{cfg.k, cfg.lambda, cfg.seed});
    ens.horizon = cfg.horizon;
    ens.train_end_day = cfg.train_end_day;
    s.write_with(cfg.paths.out / "model.json", [&](std::ostream& o) { write_model(o, ens); });
    s.write_with(cfg.paths.out / "labeled.csv", [&](std::ostream& o) { write_labeled_csv(o, labeled); });
    const auto positives = std::count_if(split.train.begin(), split.train.end(), [](const auto& e) { return e.label; });
    s.out() << "train: horizon " << cfg.horizon << ", " << split.train.size() << " training examples (" << positives
            << " positive), " << ens.members.size() << " cluster classifiers\n";
}

void cmd_score(Session& s) {
    auto& cfg = s.config();
    const auto ens = load_model(s, s.path(cfg.paths.model, "model.json"));
    const auto rows = load_features(s);
    std::vector<double> scores(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) scores[i] = predict(ens, rows[i].attrs, cfg.prune);
    s.write_with(cfg.paths.out / "scores.csv", [&](std::ostream& o) {
        o << "drug,state,day,score\n";
        for (std::size_t i = 0; i < rows.size(); ++i)
            o << csv::escape(rows[i].drug) << ',' << rows[i].state << ',' << rows[i].day << ','
              << csv::format_double(scores[i]) << '\n';
    });
    s.out() << "score: " << rows.size() << " rows scored\n";
}

void write_roc_and_lift(Session& s, const EvalReport& r) {
    s.write_with(s.out_dir() / "roc.csv", [&](std::ostream& o) {
        o << "fpr,tpr\n";
        for (const auto& p : r.roc.points) o << csv::format_double(p.fpr) << ',' << csv::format_double(p.tpr) << '\n';
    });
    s.write_with(s.out_dir() / "lift_curve.csv", [&](std::ostream& o) {
        o << "fraction,lift\n";
        for (auto [t, l] : r.lift.curve) o << csv::format_double(t) << ',' << csv::format_double(l) << '\n';
    });
}

int cmd_evaluate(Session& s, std::ostream& err) {
    auto& cfg = s.config();
    const auto model_path = s.path(cfg.paths.model, "model.json");
    if (!fs::exists(model_path)) {
        err << "error: missing trained model artifact: " << model_path.string() << "\n";
        return 1;
    }
    const auto ens = load_model(s, model_path);
    const auto rows = load_features(s);
    const auto recalls = load_recalls(s);
    auto labeled = label_for(cfg, rows, recalls, ens.horizon);
    auto split = split_by_time(std::move(labeled), ens.train_end_day, cfg.calendar.n_days);
    const auto r = evaluate_model(ens, split.test, cfg.lift_fraction, cfg.prune);

    auto j = to_json(r);
    j["train_end_day"] = ens.train_end_day;
    j["k"] = ens.k;
    j["members"] = ens.members.size();
    s.write(cfg.paths.out / "report.json", j.dump(2) + "\n");
    write_roc_and_lift(s, r);
    s.write_with(cfg.paths.out / "cluster_usage.csv", [&](std::ostream& o) {
        o << "member,cluster_id,cluster_size,max_wins\n";
        for (std::size_t m = 0; m < ens.members.size(); ++m)
            o << m << ',' << ens.members[m].cluster_id << ',' << r.usage.sizes[m] << ',' << r.usage.wins[m] << '\n';
    });
    write_recalls_per_state(s, recalls);
    s.out() << "evaluate: horizon " << r.horizon << ", test " << r.n_test << " (" << r.positives_in_test
            << " positive), auc " << fmt(r.roc.auc) << ", lift@" << r.lift.fraction << " " << fmt(r.lift.lift)
            << "\n";
    return 0;
}

void cmd_sweep(Session& s) {
    auto& cfg = s.config();
    const auto rows = load_features(s);
    const auto recalls = load_recalls(s);
    const auto settings = cfg.pipeline();

    const auto hs = horizon_sweep(rows, recalls, settings, cfg.horizons);
    s.write_with(cfg.paths.out / "lift_vs_n.csv", [&](std::ostream& o) {
        o << "horizon,auc,lift,positives_in_test,n_test\n";
        for (const auto& r : hs.rows)
            o << r.horizon << ',' << csv::format_double(r.auc) << ',' << csv::format_double(r.lift) << ','
              << r.positives_in_test << ',' << r.n_test << '\n';
    });

    // Prune sweep on the trained model when there is one, else on a fresh fit at cfg.horizon.
    Ensemble ens;
    std::vector<LabeledExample> test;
    if (const auto mp = s.path(cfg.paths.model, "model.json"); fs::exists(mp)) {
        ens = load_model(s, mp);
        test = split_by_time(label_for(cfg, rows, recalls, ens.horizon), ens.train_end_day, cfg.calendar.n_days).test;
    } else {
        auto run = run_horizon(rows, recalls, settings, cfg.horizon);
        ens = std::move(run.ensemble);
        test = std::move(run.split.test);
    }
    std::vector<std::size_t> grid = cfg.prune_grid;
    if (grid.empty()) {
        grid.resize(std::min<std::size_t>(100, ens.members.size()));
        std::iota(grid.begin(), grid.end(), std::size_t{1});
    }
    const auto points = prune_sweep(ens, test, grid, cfg.lift_fraction);
    s.write_with(cfg.paths.out / "lift_vs_m.csv", [&](std::ostream& o) {
        o << "m,lift\n";
        for (const auto& p : points) o << p.m << ',' << csv::format_double(p.lift) << '\n';
    });

    nlohmann::ordered_json j;
    j["lift_fraction"] = cfg.lift_fraction;
    j["horizon_sweep"] = to_json(hs);
    j["prune_sweep"]["horizon"] = ens.horizon;
    j["prune_sweep"]["members"] = ens.members.size();
    j["prune_sweep"]["points"] = nlohmann::ordered_json::array();
    for (const auto& p : points) j["prune_sweep"]["points"].push_back({{"m", p.m}, {"lift", p.lift}});
    s.write(cfg.paths.out / "sweep.json", j.dump(2) + "\n");

    for (const auto& r : hs.rows)
        s.out() << "sweep: N=" << r.horizon << " auc " << fmt(r.auc) << " lift " << fmt(r.lift) << " ("
                << r.positives_in_test << " test positives)\n";
    if (hs.lift_model)
        for (const auto& c : hs.lift_model->coefficients)
            s.out() << "sweep: lift rank regression " << c.name << " slope " << fmt(c.slope) << " p "
                    << fmt(c.p_value) << "\n";
    else
        s.out() << "sweep: lift rank regression unavailable: " << hs.regression_note << "\n";
}

/// Header plus numeric columns of a CSV written by this tool.
std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_numeric_csv(Session& s, const fs::path& p) {
    std::istringstream in(s.read(p));
    std::string line;
    std::getline(in, line);
    auto header = csv::split_line(line);
    std::vector<std::vector<double>> rows;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        auto fields = csv::split_line(line);
        std::vector<double> row;
        try {
            for (const auto& fld : fields) row.push_back(csv::parse_double(fld));
        } catch (const Error& e) {
            throw ParseError(p.string() + ":" + std::to_string(n) + ": " + e.what());
        }
        rows.push_back(std::move(row));
    }
    return {std::move(header), std::move(rows)};
}

charts::Series column_series(const std::string& name, const std::vector<std::vector<double>>& rows, std::size_t x,
                             std::size_t y) {
    charts::Series out{name, {}};
    for (const auto& r : rows)
        if (r.size() > std::max(x, y)) out.points.emplace_back(r[x], r[y]);
    return out;
}

void cmd_report(Session& s) {
    auto& cfg = s.config();
    const fs::path dir = cfg.paths.input.empty() ? cfg.paths.out : cfg.paths.input;
    struct Chart {
        const char* csv;
        const char* svg;
        charts::ChartSpec spec;
        std::size_t x, y;
        const char* series;
    };
    const Chart plan[] = {
        {"roc.csv", "roc.svg", {"ROC curve", "false positive rate", "true positive rate", true, true}, 0, 1, "model"},
        {"lift_curve.csv", "lift_curve.svg", {"Lift curve", "fraction ranked T", "lift"}, 0, 1, "lift"},
        {"lift_vs_n.csv", "lift_vs_n.svg", {"Lift vs prediction horizon", "horizon N (days)", "lift"}, 0, 2, "lift"},
        {"lift_vs_n.csv", "auc_vs_n.svg", {"AUC vs prediction horizon", "horizon N (days)", "AUC"}, 0, 1, "auc"},
        {"lift_vs_m.csv", "lift_vs_m.svg", {"Lift vs retained classifiers", "classifiers kept m", "lift"}, 0, 1, "lift"},
    };
    std::size_t rendered = 0;
    for (const auto& c : plan) {
        const auto in = dir / c.csv;
        if (!fs::exists(in)) continue;
        auto [header, rows] = read_numeric_csv(s, in);
        s.write(cfg.paths.out / c.svg, charts::line_chart(c.spec, {column_series(c.series, rows, c.x, c.y)}));
        ++rendered;
    }
    if (rendered == 0) throw ValidationError("no chart inputs (roc.csv, lift_curve.csv, ...) found in " + dir.string());
    s.out() << "report: " << rendered << " charts written to " << cfg.paths.out.string() << "\n";
}

void cmd_convert(Session& s) {
    auto& cfg = s.config();
    const fs::path src = !cfg.paths.openfda.empty() ? cfg.paths.openfda : cfg.paths.input;
    if (src.empty()) throw ValidationError("convert needs an openFDA enforcement file (--openfda)");
    std::optional<DrugLexicon> lexicon;
    if (!cfg.paths.drugs.empty()) lexicon = load_drugs(s);
    const auto text = s.read(src);
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError(src.string() + ": not valid JSON");
    ParseResult<RecallRecord> result;
    try {
        result = convert_openfda(j, cfg.calendar, lexicon ? &*lexicon : nullptr);
    } catch (const ParseError& e) {
        throw ParseError(src.string() + ": " + e.what());
    }
    s.write_with(cfg.paths.out / "recalls.jsonl", [&](std::ostream& o) { write_recall_file(o, result.records); });
    if (!result.errors.empty()) write_row_errors(s, cfg.paths.out / "convert_errors.csv", result.errors);
    s.out() << "convert: " << result.records.size() << " recall records, " << result.errors.size()
            << " results skipped\n";
}

} // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Early warning of drug recalls from aggregated search query counts", "recall-sentinel"};
    app.require_subcommand(1);
    app.fallthrough();
    Flags f;

    app.add_option("--config", f.config, "JSON run configuration; flags override its values");
    app.add_option("--out", f.out, "Output directory");
    app.add_option("--horizon", f.horizon, "Prediction horizon N in days")->check(CLI::Range(1, 1000));
    app.add_option("--k", f.k, "Number of negative clusters")->check(CLI::PositiveNumber);
    app.add_option("--lambda", f.lambda, "Ridge penalty")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", f.seed, "Random seed");
    app.add_option("--train-end-day", f.train_end_day, "First day of the test partition");
    app.add_option("--lift-fraction", f.lift_fraction, "Top fraction T for lift");
    app.add_option("--prune", f.prune, "Keep only the m largest-cluster classifiers")->check(CLI::PositiveNumber);
    app.add_option("--min-queries", f.min_queries, "Minimum total queries for a drug to be modelled");
    app.add_option("--horizons", f.horizons, "Horizon grid for sweep")->delimiter(',');
    app.add_option("--drugs", f.drugs, "Drug lexicon CSV");
    app.add_option("--symptoms", f.symptoms, "Symptom phrase list");
    app.add_option("--queries", f.queries, "Query log JSONL");
    app.add_option("--cube", f.cube, "Count cube CSV");
    app.add_option("--recalls", f.recalls, "Recall events JSONL");
    app.add_option("--features", f.features, "Feature CSV");
    app.add_option("--model", f.model, "Trained model JSON");
    app.add_option("--openfda", f.openfda, "openFDA drug enforcement JSON");
    app.add_option("--in", f.input, "Input directory (report) or file (convert)");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario with injected pre-recall signal");
    synth->add_option("--gamma", f.gamma, "Pre-recall rate multiplier")->check(CLI::PositiveNumber);
    synth->add_option("--injection-days", f.injection_days, "Days of injected signal before each recall");
    synth->add_option("--ramp", f.ramp, "Injection profile")->check(CLI::IsMember({"flat", "linear"}));
    synth->add_option("--n-drugs", f.n_drugs);
    synth->add_option("--n-states", f.n_states);
    synth->add_option("--n-days", f.n_days);
    synth->add_option("--n-recalls", f.n_recalls);
    synth->add_option("--symptom-boost", f.symptom_boost, "Extra symptom share during injection");
    synth->add_option("--nationwide-probability", f.nationwide_probability);
    synth->add_flag("--query-log", f.query_log, "Write a query log instead of a count cube");

    const std::map<std::string, std::string> help = {
        {"ingest", "Match a query log against the lexicons into a daily count cube"},
        {"featurize", "Compute the 20 trend attributes per (drug, state, day)"},
        {"train", "Label, split by time and train the cluster ensemble"},
        {"score", "Score feature rows with a trained model"},
        {"evaluate", "ROC, lift, strata, importance and cluster usage on the test period"},
        {"sweep", "Lift across prediction horizons and pruning levels"},
        {"report", "Render SVG charts from evaluation CSVs"},
        {"convert", "Convert openFDA enforcement records to the native recall format"},
    };
    for (const char* name : {"ingest", "featurize", "train", "score", "evaluate", "sweep", "report", "convert"})
        app.add_subcommand(name, help.at(name));

    std::vector<const char*> argv{"recall-sentinel"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << "run 'recall-sentinel --help' for usage\n";
        return 2;
    }
    const auto* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();

    try {
        RunConfig cfg;
        if (!f.config.empty()) {
            cfg = RunConfig::load(f.config);
            if (cfg.paths.out == ".") cfg.paths.out = fs::path(f.config).parent_path();
            if (cfg.paths.out.empty()) cfg.paths.out = ".";
        }
        auto set = [&](const char* flag, auto& field, const auto& value) {
            if (app.count(flag)) field = value;
        };
        set("--out", cfg.paths.out, fs::path(f.out));
        set("--horizon", cfg.horizon, f.horizon);
        set("--k", cfg.k, f.k);
        set("--lambda", cfg.lambda, f.lambda);
        set("--seed", cfg.seed, f.seed);
        set("--train-end-day", cfg.train_end_day, f.train_end_day);
        set("--lift-fraction", cfg.lift_fraction, f.lift_fraction);
        if (app.count("--prune")) cfg.prune = f.prune;
        set("--min-queries", cfg.min_queries, f.min_queries);
        set("--horizons", cfg.horizons, f.horizons);
        set("--drugs", cfg.paths.drugs, fs::path(f.drugs));
        set("--symptoms", cfg.paths.symptoms, fs::path(f.symptoms));
        set("--queries", cfg.paths.queries, fs::path(f.queries));
        set("--cube", cfg.paths.cube, fs::path(f.cube));
        set("--recalls", cfg.paths.recalls, fs::path(f.recalls));
        set("--features", cfg.paths.features, fs::path(f.features));
        set("--model", cfg.paths.model, fs::path(f.model));
        set("--openfda", cfg.paths.openfda, fs::path(f.openfda));
        set("--in", cfg.paths.input, fs::path(f.input));
        if (command != "synth") cfg.validate();

        Session session(command, std::move(cfg), out);
        int status = 0;
        if (command == "synth")
            cmd_synth(session, f, app, *sub);
        else if (command == "ingest")
            cmd_ingest(session);
        else if (command == "featurize")
            cmd_featurize(session);
        else if (command == "train")
            cmd_train(session);
        else if (command == "score")
            cmd_score(session);
        else if (command == "evaluate")
            status = cmd_evaluate(session, err);
        else if (command == "sweep")
            cmd_sweep(session);
        else if (command == "report")
            cmd_report(session);
        else if (command == "convert")
            cmd_convert(session);
        if (status == 0) session.write_manifest();
        return status;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace sentinel
