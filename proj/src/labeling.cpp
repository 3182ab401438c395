#include "sentinel/labeling.hpp"

#include "sentinel/csv.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

namespace sentinel {

namespace {

/// The recall supplying metadata for a (drug, state): earliest day, then file order.
std::map<SeriesKey, const RecallRecord*> first_recalls(std::span<const RecallRecord> recalls) {
    std::map<SeriesKey, const RecallRecord*> first;
    for (const auto& r : recalls)
        for (const auto& s : r.states) {
            auto [it, inserted] = first.try_emplace({r.drug, s}, &r);
            if (!inserted && r.day < it->second->day) it->second = &r;
        }
    return first;
}

} // namespace

std::vector<LabeledExample> label_examples(std::span<const FeatureRow> rows, std::span<const RecallRecord> recalls,
                                           int horizon, int study_days, int max_horizon) {
    if (horizon < 1 || horizon > max_horizon)
        throw ValidationError("horizon must be in [1, " + std::to_string(max_horizon) + "], got " +
                              std::to_string(horizon));
    const auto first = first_recalls(recalls);
    std::vector<LabeledExample> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.day + horizon >= study_days) continue;
        LabeledExample ex{row.drug, row.state, row.day, row.attrs, 0, horizon, std::nullopt, std::nullopt};
        if (auto it = first.find({row.drug, row.state}); it != first.end() && it->second->day == row.day + horizon) {
            ex.label = 1;
            ex.classification = it->second->classification;
            ex.rx_otc = it->second->rx_otc;
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<LabeledExample> post_recall_exclusion(std::vector<LabeledExample> examples,
                                                  std::span<const RecallRecord> recalls) {
    const auto first = first_recall_days(recalls);
    std::erase_if(examples, [&](const LabeledExample& e) {
        auto it = first.find({e.drug, e.state});
        return it != first.end() && e.day >= it->second;
    });
    return examples;
}

DatasetSplit split_by_time(std::vector<LabeledExample> examples, int train_end_day, int study_days) {
    if (train_end_day <= 0 || train_end_day >= study_days)
        throw ValidationError("train_end_day must be in (0, " + std::to_string(study_days) + "), got " +
                              std::to_string(train_end_day));
    DatasetSplit split;
    for (auto& e : examples) (e.day < train_end_day ? split.train : split.test).push_back(std::move(e));
    if (split.train.empty()) throw ValidationError("time split leaves the training partition empty");
    if (split.test.empty()) throw ValidationError("time split leaves the test partition empty");
    return split;
}

void write_labeled_csv(std::ostream& out, std::span<const LabeledExample> examples) {
    out << feature_csv_header() << ",label,horizon,classification,rx_otc\n";
    for (const auto& e : examples) {
        write_feature_fields(out, FeatureRow{e.drug, e.state, e.day, e.features});
        out << ',' << e.label << ',' << e.horizon << ','
            << (e.classification ? to_string(*e.classification) : "") << ','
            << (e.rx_otc ? to_string(*e.rx_otc) : "") << '\n';
    }
}

std::vector<LabeledExample> read_labeled_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("labeled file: missing header");
    if (line != feature_csv_header() + ",label,horizon,classification,rx_otc")
        throw ParseError("labeled file: unexpected header");
    std::vector<LabeledExample> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto f = csv::split_line(line);
            if (f.size() != 3 + kAttributeCount + 4) throw ParseError("expected 27 columns");
            auto row = parse_feature_fields(f);
            LabeledExample e{row.drug, row.state, row.day, row.attrs, 0, 0, std::nullopt, std::nullopt};
            e.label = static_cast<int>(csv::parse_int(f[23]));
            if (e.label != 0 && e.label != 1) throw ParseError("label must be 0 or 1");
            e.horizon = static_cast<int>(csv::parse_int(f[24]));
            if (!f[25].empty()) {
                e.classification = parse_recall_class(f[25]);
                if (!e.classification) throw ParseError("bad classification '" + f[25] + "'");
            }
            if (!f[26].empty()) {
                e.rx_otc = parse_rx_otc(f[26]);
                if (!e.rx_otc) throw ParseError("bad rx_otc '" + f[26] + "'");
            }
            out.push_back(std::move(e));
        } catch (const Error& e) {
            throw ParseError("labeled file line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace sentinel
