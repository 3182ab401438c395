#include "sentinel/synth.hpp"

#include "sentinel/features.hpp"
#include "sentinel/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <tuple>

namespace sentinel {

namespace {

constexpr std::uint64_t kRecallStream = 1;
constexpr std::uint64_t kDrugStream = 2;
constexpr std::uint64_t kCellStream = 3;
constexpr std::uint64_t kLogStream = 4;

const std::vector<std::string>& symptom_phrases() {
    static const std::vector<std::string> p = {"rash", "nausea", "headache", "muscle pain", "dizziness", "fatigue"};
    return p;
}

const std::vector<std::string>& plain_suffixes() {
    static const std::vector<std::string> s = {"", "dosage", "price", "generic", "interactions", "side effects"};
    return s;
}

std::string indexed(const char* stem, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%02d", stem, i);
    return buf;
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(unit_double(rng()) * static_cast<double>(n)));
}

template <std::size_t N>
std::size_t pick_weighted(std::mt19937_64& rng, const std::array<double, N>& w) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    double u = unit_double(rng()) * total;
    for (std::size_t i = 0; i < N; ++i) {
        if (u < w[i]) return i;
        u -= w[i];
    }
    return N - 1;
}

} // namespace

void SynthConfig::validate() const {
    auto fail = [](const std::string& m) { throw ValidationError("synth config: " + m); };
    if (n_drugs < 1) fail("n_drugs must be >= 1");
    if (n_states < 1 || n_states > static_cast<int>(us_states().size())) fail("n_states must be in [1, 50]");
    if (injection_days < 1) fail("injection_days must be >= 1");
    if (n_days <= injection_days + kWarmupDays)
        fail("n_days must exceed injection_days + " + std::to_string(kWarmupDays) + " warm-up days");
    if (!start.ok()) fail("start date is invalid");
    if (!(popularity_median > 0)) fail("popularity_median must be positive");
    if (!(popularity_dispersion >= 0)) fail("popularity_dispersion must be non-negative");
    if (!state_weights.empty() && static_cast<int>(state_weights.size()) != n_states)
        fail("state_weights must have n_states entries");
    for (double w : state_weights)
        if (!(w >= 0)) fail("state weights must be non-negative");
    if (!(symptom_fraction >= 0 && symptom_fraction <= 1)) fail("symptom_fraction must be in [0, 1]");
    if (n_recalls < 0) fail("n_recalls must be non-negative");
    for (double c : class_mix)
        if (!(c >= 0)) fail("class_mix entries must be non-negative");
    if (!(std::accumulate(class_mix.begin(), class_mix.end(), 0.0) > 0)) fail("class_mix must not be all zero");
    if (!(rx_fraction >= 0 && otc_fraction >= 0 && rx_fraction + otc_fraction <= 1 + 1e-12))
        fail("rx_fraction and otc_fraction must be non-negative and sum to at most 1");
    if (!(nationwide_probability >= 0 && nationwide_probability <= 1)) fail("nationwide_probability must be in [0, 1]");
    if (max_local_states < 1) fail("max_local_states must be >= 1");
    if (!(gamma >= 1)) fail("gamma must be >= 1");
    if (!(symptom_boost >= 0)) fail("symptom_boost must be non-negative");
}

StudyCalendar SynthConfig::calendar() const {
    StudyCalendar cal;
    cal.start = start;
    cal.n_days = n_days;
    cal.states.assign(us_states().begin(), us_states().begin() + n_states);
    return cal;
}

SynthOutput generate(const SynthConfig& config) {
    config.validate();
    SynthOutput out;
    out.calendar = config.calendar();
    const auto& states = out.calendar.states;

    std::vector<DrugEntry> entries;
    out.popularity.resize(static_cast<std::size_t>(config.n_drugs));
    for (int d = 0; d < config.n_drugs; ++d) {
        std::mt19937_64 rng(derive_seed(config.seed, kDrugStream, static_cast<std::uint64_t>(d)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        out.popularity[d] = config.popularity_median * std::exp(config.popularity_dispersion * gauss(rng));
        const double u = unit_double(rng());
        RxOtc status = u < config.rx_fraction                          ? RxOtc::RX
                       : u < config.rx_fraction + config.otc_fraction ? RxOtc::OTC
                                                                       : RxOtc::Unclassified;
        entries.push_back({indexed("drug", d), {indexed("brand", d)}, status});
    }
    out.drugs = DrugLexicon(entries);
    out.symptoms = SymptomLexicon(symptom_phrases());

    // Recall schedule.
    std::mt19937_64 rrng(derive_seed(config.seed, kRecallStream));
    const int first_day = config.injection_days + kWarmupDays;
    const int span_days = config.n_days - first_day;
    for (int r = 0; r < config.n_recalls; ++r) {
        RecallRecord rec;
        const auto d = pick(rrng, static_cast<std::size_t>(config.n_drugs));
        rec.drug = out.drugs.entries()[d].canonical_name;
        rec.rx_otc = out.drugs.entries()[d].rx_otc;
        rec.day = first_day + static_cast<int>(pick(rrng, static_cast<std::size_t>(span_days)));
        rec.initiation_date = out.calendar.date_at(rec.day);
        rec.classification = static_cast<RecallClass>(pick_weighted(rrng, config.class_mix));
        rec.nationwide = unit_double(rrng()) < config.nationwide_probability;
        if (rec.nationwide) {
            rec.states = states;
        } else {
            const auto count = 1 + pick(rrng, static_cast<std::size_t>(std::min<int>(config.max_local_states,
                                                                                       config.n_states)));
            std::vector<std::string> pool = states;
            for (std::size_t i = 0; i < count; ++i) {
                const auto j = i + pick(rrng, pool.size() - i);
                std::swap(pool[i], pool[j]);
                rec.states.push_back(pool[i]);
            }
            std::sort(rec.states.begin(), rec.states.end());
            rec.nationwide = rec.states.size() == states.size();
        }
        out.recalls.push_back(std::move(rec));
    }
    std::stable_sort(out.recalls.begin(), out.recalls.end(), [](const auto& a, const auto& b) {
        return std::tie(a.day, a.drug) < std::tie(b.day, b.drug);
    });
    for (const auto& r : out.recalls)
        out.truth.entries.push_back(
            {r.drug, r.states, r.day, r.day - config.injection_days, r.day - 1, config.gamma});

    // Per-cell counts.
    const std::size_t n_states = states.size();
    std::vector<CountCube::Series> series(static_cast<std::size_t>(config.n_drugs) * n_states);
    parallel_for(series.size(), [&](std::size_t idx) {
        const std::size_t d = idx / n_states, s = idx % n_states;
        const auto& drug = out.drugs.entries()[d].canonical_name;
        std::vector<double> mult(static_cast<std::size_t>(config.n_days), 1.0);
        std::vector<bool> boosted(static_cast<std::size_t>(config.n_days), false);
        for (const auto& r : out.recalls) {
            if (r.drug != drug || !std::binary_search(r.states.begin(), r.states.end(), states[s])) continue;
            for (int i = 0; i < config.injection_days; ++i) {
                const int day = r.day - config.injection_days + i;
                const double m = config.ramp == RampShape::Flat
                                     ? config.gamma
                                     : 1.0 + (config.gamma - 1.0) * (i + 1) / config.injection_days;
                mult[day] = std::max(mult[day], m);
                boosted[day] = true;
            }
        }
        const double weight = config.state_weights.empty() ? 1.0 : config.state_weights[s];
        const double base = out.popularity[d] * weight;
        std::mt19937_64 rng(derive_seed(config.seed, kCellStream, idx));
        auto& ser = series[idx];
        ser.total.assign(static_cast<std::size_t>(config.n_days), 0);
        ser.symptom.assign(static_cast<std::size_t>(config.n_days), 0);
        for (int day = 0; day < config.n_days; ++day) {
            const double rate = base * mult[day];
            std::uint32_t total = 0;
            if (rate > 0) total = static_cast<std::uint32_t>(std::poisson_distribution<long>(rate)(rng));
            const double beta = boosted[day] ? std::min(1.0, config.symptom_fraction + config.symptom_boost)
                                             : config.symptom_fraction;
            std::uint32_t sym = 0;
            if (total > 0 && beta > 0)
                sym = static_cast<std::uint32_t>(std::binomial_distribution<long>(total, beta)(rng));
            ser.total[day] = total;
            ser.symptom[day] = sym;
        }
    });

    out.cube = CountCube(config.n_days, states);
    for (std::size_t idx = 0; idx < series.size(); ++idx) {
        const auto& entry = out.drugs.entries()[idx / n_states];
        const auto& state = states[idx % n_states];
        for (int day = 0; day < config.n_days; ++day)
            if (series[idx].total[day] > 0)
                out.cube.add(entry.canonical_name, state, day, series[idx].total[day], series[idx].symptom[day]);
        out.cube.set_rx_otc(entry.canonical_name, entry.rx_otc);
    }
    return out;
}

std::vector<QueryRecord> expand_query_log(const SynthOutput& synth, std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, kLogStream));
    const auto& phrases = symptom_phrases();
    const auto& suffixes = plain_suffixes();
    std::vector<QueryRecord> log;
    const auto& cube = synth.cube;
    for (int day = 0; day < cube.n_days(); ++day) {
        const auto date = synth.calendar.date_at(day);
        for (const auto& [key, ser] : cube.all_series()) {
            const auto* entry = synth.drugs.find(key.first);
            if (!entry) throw Error("synthetic cube names a drug missing from its lexicon");
            for (std::uint32_t q = 0; q < ser.total[day]; ++q) {
                const bool with_symptom = q < ser.symptom[day];
                std::string name = (!entry->brand_names.empty() && (rng() & 1))
                                       ? entry->brand_names.front()
                                       : entry->canonical_name;
                std::string text = name;
                if (with_symptom) {
                    text += " " + phrases[pick(rng, phrases.size())];
                } else if (const auto& sfx = suffixes[pick(rng, suffixes.size())]; !sfx.empty()) {
                    text += " " + sfx;
                }
                log.push_back({"u" + std::to_string(rng() % 1000000), date, day, key.second, std::move(text)});
            }
        }
    }
    return log;
}

nlohmann::ordered_json truth_to_json(const InjectionTruth& truth) {
    nlohmann::ordered_json j;
    j["injections"] = nlohmann::ordered_json::array();
    for (const auto& e : truth.entries)
        j["injections"].push_back({{"drug", e.drug},
                                   {"states", e.states},
                                   {"recall_day", e.recall_day},
                                   {"window", {e.window_begin, e.window_end}},
                                   {"gamma", e.gamma}});
    return j;
}

nlohmann::ordered_json synth_config_to_json(const SynthConfig& c) {
    nlohmann::ordered_json j;
    j["n_drugs"] = c.n_drugs;
    j["n_states"] = c.n_states;
    j["n_days"] = c.n_days;
    j["start"] = format_iso_date(c.start);
    j["popularity_median"] = c.popularity_median;
    j["popularity_dispersion"] = c.popularity_dispersion;
    j["state_weights"] = c.state_weights;
    j["symptom_fraction"] = c.symptom_fraction;
    j["n_recalls"] = c.n_recalls;
    j["class_mix"] = c.class_mix;
    j["rx_fraction"] = c.rx_fraction;
    j["otc_fraction"] = c.otc_fraction;
    j["nationwide_probability"] = c.nationwide_probability;
    j["max_local_states"] = c.max_local_states;
    j["injection_days"] = c.injection_days;
    j["gamma"] = c.gamma;
    j["ramp"] = c.ramp == RampShape::Flat ? "flat" : "linear";
    j["symptom_boost"] = c.symptom_boost;
    j["seed"] = c.seed;
    return j;
}

SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig c) {
    try {
        auto get = [&](const char* key, auto& field) {
            if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(field);
        };
        get("n_drugs", c.n_drugs);
        get("n_states", c.n_states);
        get("n_days", c.n_days);
        if (auto it = j.find("start"); it != j.end()) {
            auto d = parse_iso_date(it->get<std::string>());
            if (!d) throw ValidationError("synth config: invalid start date");
            c.start = *d;
        }
        get("popularity_median", c.popularity_median);
        get("popularity_dispersion", c.popularity_dispersion);
        get("state_weights", c.state_weights);
        get("symptom_fraction", c.symptom_fraction);
        get("n_recalls", c.n_recalls);
        get("class_mix", c.class_mix);
        get("rx_fraction", c.rx_fraction);
        get("otc_fraction", c.otc_fraction);
        get("nationwide_probability", c.nationwide_probability);
        get("max_local_states", c.max_local_states);
        get("injection_days", c.injection_days);
        get("gamma", c.gamma);
        if (auto it = j.find("ramp"); it != j.end()) {
            const auto r = it->get<std::string>();
            if (r == "flat")
                c.ramp = RampShape::Flat;
            else if (r == "linear")
                c.ramp = RampShape::Linear;
            else
                throw ValidationError("synth config: ramp must be \"flat\" or \"linear\"");
        }
        get("symptom_boost", c.symptom_boost);
        get("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("synth config: ") + e.what());
    }
    return c;
}

} // namespace sentinel
