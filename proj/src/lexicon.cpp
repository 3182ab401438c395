#include "sentinel/lexicon.hpp"

#include "sentinel/csv.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace sentinel {

namespace {

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(unsigned char c) {
    return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
           (c >= 123 && c <= 126);
}

} // namespace

std::string normalize_text(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (unsigned char c : raw) {
        if (is_space(c) || is_ascii_punct(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    }
    return out;
}

std::vector<std::string_view> tokenize(std::string_view normalized) {
    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < normalized.size()) {
        std::size_t end = normalized.find(' ', pos);
        if (end == std::string_view::npos) end = normalized.size();
        if (end > pos) tokens.push_back(normalized.substr(pos, end - pos));
        pos = end + 1;
    }
    return tokens;
}

void PhraseIndex::add(std::string_view normalized_phrase, std::size_t id) {
    auto toks = tokenize(normalized_phrase);
    if (toks.empty()) return;
    Phrase p{{}, id};
    for (auto t : toks) p.tokens.emplace_back(t);
    by_first_[p.tokens.front()].push_back(std::move(p));
}

bool PhraseIndex::matches_at(const Phrase& p, const std::vector<std::string_view>& tokens,
                             std::size_t at) const {
    if (at + p.tokens.size() > tokens.size()) return false;
    for (std::size_t j = 1; j < p.tokens.size(); ++j)
        if (tokens[at + j] != p.tokens[j]) return false;
    return true;
}

std::vector<std::size_t> PhraseIndex::find_all(const std::vector<std::string_view>& tokens) const {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto it = by_first_.find(std::string(tokens[i]));
        if (it == by_first_.end()) continue;
        for (const auto& p : it->second)
            if (matches_at(p, tokens, i)) ids.push_back(p.id);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

bool PhraseIndex::any(const std::vector<std::string_view>& tokens) const {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto it = by_first_.find(std::string(tokens[i]));
        if (it == by_first_.end()) continue;
        for (const auto& p : it->second)
            if (matches_at(p, tokens, i)) return true;
    }
    return false;
}

DrugLexicon::DrugLexicon(std::vector<DrugEntry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        auto& e = entries_[i];
        e.canonical_name = normalize_text(e.canonical_name);
        if (e.canonical_name.empty())
            throw ValidationError("drug entry " + std::to_string(i + 1) + " has an empty canonical name");
        for (auto& b : e.brand_names) b = normalize_text(b);
        std::erase_if(e.brand_names, [](const std::string& b) { return b.empty(); });
        if (!by_canonical_.emplace(e.canonical_name, i).second)
            throw ValidationError("duplicate canonical drug name '" + e.canonical_name + "'");
        index_.add(e.canonical_name, i);
        for (const auto& b : e.brand_names) index_.add(b, i);
    }
}

const DrugEntry* DrugLexicon::find(std::string_view canonical) const {
    auto it = by_canonical_.find(std::string(canonical));
    return it == by_canonical_.end() ? nullptr : &entries_[it->second];
}

std::vector<std::size_t> DrugLexicon::match_ids(std::string_view normalized_query) const {
    return index_.find_all(tokenize(normalized_query));
}

SymptomLexicon::SymptomLexicon(std::vector<std::string> phrases) {
    for (auto& p : phrases) {
        auto norm = normalize_text(p);
        if (norm.empty()) continue;
        if (phrases_.insert(norm).second) index_.add(norm, phrases_.size() - 1);
    }
}

bool SymptomLexicon::contains(std::string_view normalized_query) const {
    return index_.any(tokenize(normalized_query));
}

std::set<std::string> match_drugs(std::string_view normalized_query, const DrugLexicon& lexicon) {
    std::set<std::string> out;
    for (auto id : lexicon.match_ids(normalized_query))
        out.insert(lexicon.entries()[id].canonical_name);
    return out;
}

bool contains_symptom(std::string_view normalized_query, const SymptomLexicon& lexicon) {
    return lexicon.contains(normalized_query);
}

DrugLexicon read_drug_lexicon(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("drug lexicon: missing header");
    ++lineno;
    auto header = csv::split_line(line);
    if (header != std::vector<std::string>{"canonical", "brands", "rx_otc"})
        throw ParseError("drug lexicon: header must be 'canonical,brands,rx_otc'");

    std::vector<DrugEntry> entries;
    std::vector<std::string> problems;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto where = "line " + std::to_string(lineno) + ": ";
        std::vector<std::string> f;
        try {
            f = csv::split_line(line);
        } catch (const ParseError& e) {
            problems.push_back(where + e.what());
            continue;
        }
        if (f.size() != 3) {
            problems.push_back(where + "expected 3 fields, got " + std::to_string(f.size()));
            continue;
        }
        DrugEntry e;
        e.canonical_name = normalize_text(f[0]);
        if (e.canonical_name.empty()) {
            problems.push_back(where + "empty canonical name");
            continue;
        }
        if (!seen.insert(e.canonical_name).second) {
            problems.push_back(where + "duplicate canonical name '" + e.canonical_name + "'");
            continue;
        }
        std::stringstream brands(f[1]);
        for (std::string b; std::getline(brands, b, '|');)
            if (auto n = normalize_text(b); !n.empty()) e.brand_names.push_back(n);
        auto rx = parse_rx_otc(f[2]);
        if (!rx) {
            problems.push_back(where + "rx_otc must be RX, OTC or UNCLASSIFIED, got '" + f[2] + "'");
            continue;
        }
        e.rx_otc = *rx;
        entries.push_back(std::move(e));
    }
    if (!problems.empty()) {
        std::string msg = "drug lexicon has " + std::to_string(problems.size()) + " malformed row(s):";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ParseError(msg);
    }
    return DrugLexicon(std::move(entries));
}

void write_drug_lexicon(std::ostream& out, const DrugLexicon& lexicon) {
    out << "canonical,brands,rx_otc\n";
    for (const auto& e : lexicon.entries()) {
        std::string brands;
        for (std::size_t i = 0; i < e.brand_names.size(); ++i) {
            if (i) brands += '|';
            brands += e.brand_names[i];
        }
        out << csv::escape(e.canonical_name) << ',' << csv::escape(brands) << ','
            << to_string(e.rx_otc) << '\n';
    }
}

SymptomLexicon read_symptom_lexicon(std::istream& in) {
    std::vector<std::string> phrases;
    for (std::string line; std::getline(in, line);) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (auto n = normalize_text(line); !n.empty()) phrases.push_back(std::move(n));
    }
    return SymptomLexicon(std::move(phrases));
}

void write_symptom_lexicon(std::ostream& out, const SymptomLexicon& lexicon) {
    for (const auto& p : lexicon.phrases()) out << p << '\n';
}

} // namespace sentinel
