#include "sentinel/config.hpp"

#include <fstream>

namespace sentinel {

namespace fs = std::filesystem;

RunConfig RunConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    RunConfig c;
    try {
        if (auto s = j.find("study"); s != j.end()) {
            if (auto it = s->find("start"); it != s->end()) {
                auto d = parse_iso_date(it->get<std::string>());
                if (!d) throw ValidationError("config: study.start is not a valid date");
                c.calendar.start = *d;
            }
            if (auto it = s->find("days"); it != s->end()) c.calendar.n_days = it->get<int>();
            if (auto it = s->find("states"); it != s->end()) c.calendar.states = it->get<std::vector<std::string>>();
        }
        if (auto p = j.find("paths"); p != j.end()) {
            auto path = [&](const char* key, fs::path& field) {
                if (auto it = p->find(key); it != p->end() && it->is_string()) {
                    fs::path v = it->get<std::string>();
                    field = v.is_absolute() ? v : base_dir / v;
                }
            };
            path("drugs", c.paths.drugs);
            path("symptoms", c.paths.symptoms);
            path("queries", c.paths.queries);
            path("cube", c.paths.cube);
            path("recalls", c.paths.recalls);
            path("features", c.paths.features);
            path("model", c.paths.model);
            path("openfda", c.paths.openfda);
            path("input", c.paths.input);
            path("out", c.paths.out);
        }
        auto get = [&](const char* key, auto& field) {
            if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(field);
        };
        get("horizon", c.horizon);
        get("max_horizon", c.max_horizon);
        get("train_end_day", c.train_end_day);
        get("k", c.k);
        get("lambda", c.lambda);
        get("lift_fraction", c.lift_fraction);
        if (auto it = j.find("prune"); it != j.end() && !it->is_null()) c.prune = it->get<std::size_t>();
        get("seed", c.seed);
        get("min_queries", c.min_queries);
        get("horizons", c.horizons);
        get("prune_grid", c.prune_grid);
        if (auto it = j.find("synth"); it != j.end()) c.synth = synth_config_from_json(*it);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
}

RunConfig RunConfig::load(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open config file " + file.string());
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ValidationError("config file " + file.string() + " is not a JSON object");
    return from_json(j, file.parent_path());
}

nlohmann::ordered_json RunConfig::to_json(const fs::path& relative_to) const {
    nlohmann::ordered_json j;
    j["study"]["start"] = format_iso_date(calendar.start);
    j["study"]["days"] = calendar.n_days;
    j["study"]["states"] = calendar.states;
    auto rel = [&](const fs::path& p) -> nlohmann::ordered_json {
        if (p.empty()) return nullptr;
        if (!relative_to.empty()) {
            auto r = p.lexically_normal().lexically_relative(relative_to.lexically_normal());
            if (!r.empty() && *r.begin() != "..") return r.generic_string();
        }
        return p.generic_string();
    };
    auto& p = j["paths"];
    p["drugs"] = rel(paths.drugs);
    p["symptoms"] = rel(paths.symptoms);
    p["queries"] = rel(paths.queries);
    p["cube"] = rel(paths.cube);
    p["recalls"] = rel(paths.recalls);
    p["features"] = rel(paths.features);
    p["model"] = rel(paths.model);
    p["out"] = rel(paths.out);
    j["horizon"] = horizon;
    j["max_horizon"] = max_horizon;
    j["train_end_day"] = train_end_day;
    j["k"] = k;
    j["lambda"] = lambda;
    j["lift_fraction"] = lift_fraction;
    j["prune"] = prune ? nlohmann::ordered_json(*prune) : nlohmann::ordered_json(nullptr);
    j["seed"] = seed;
    j["min_queries"] = min_queries;
    j["horizons"] = horizons;
    j["prune_grid"] = prune_grid;
    j["synth"] = synth_config_to_json(synth);
    return j;
}

PipelineSettings RunConfig::pipeline() const {
    PipelineSettings s;
    s.study_days = calendar.n_days;
    s.train_end_day = train_end_day;
    s.max_horizon = max_horizon;
    s.k = k;
    s.lambda = lambda;
    s.seed = seed;
    s.lift_fraction = lift_fraction;
    return s;
}

void RunConfig::validate() const {
    calendar.validate();
    if (max_horizon < 1) throw ValidationError("max_horizon must be >= 1");
    if (horizon < 1 || horizon > max_horizon)
        throw ValidationError("horizon must be in [1, " + std::to_string(max_horizon) + "]");
    if (train_end_day <= 0 || train_end_day >= calendar.n_days)
        throw ValidationError("train_end_day must be in (0, " + std::to_string(calendar.n_days) + ")");
    if (k < 1) throw ValidationError("k must be >= 1");
    if (!(lambda >= 0)) throw ValidationError("lambda must be non-negative");
    if (!(lift_fraction > 0 && lift_fraction <= 1)) throw ValidationError("lift fraction must be in (0, 1]");
    if (prune && *prune < 1) throw ValidationError("prune must be >= 1");
    for (int n : horizons)
        if (n < 1 || n > max_horizon) throw ValidationError("horizon grid value " + std::to_string(n) + " out of range");
}

fs::path RunConfig::resolve(const fs::path& configured, const char* default_name) const {
    return configured.empty() ? paths.out / default_name : configured;
}

} // namespace sentinel
