#pragma once

#include "sentinel/common.hpp"

#include <cstddef>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sentinel {

/// Lowercases ASCII, maps punctuation to spaces, collapses whitespace runs and trims.
/// Bytes outside ASCII pass through unchanged.
std::string normalize_text(std::string_view raw);

/// Splits a normalized string on single spaces.
std::vector<std::string_view> tokenize(std::string_view normalized);

struct DrugEntry {
    std::string canonical_name;
    std::vector<std::string> brand_names;
    RxOtc rx_otc = RxOtc::Unclassified;
};

/// Whole-token phrase lookup keyed by a phrase's first token.
class PhraseIndex {
public:
    void add(std::string_view normalized_phrase, std::size_t id);

    /// Ids of every phrase occurring as a contiguous token run, in ascending order.
    std::vector<std::size_t> find_all(const std::vector<std::string_view>& tokens) const;
    bool any(const std::vector<std::string_view>& tokens) const;

private:
    struct Phrase {
        std::vector<std::string> tokens;
        std::size_t id;
    };
    bool matches_at(const Phrase& p, const std::vector<std::string_view>& tokens,
                    std::size_t at) const;

    std::unordered_map<std::string, std::vector<Phrase>> by_first_;
};

class DrugLexicon {
public:
    DrugLexicon() = default;
    /// Names are normalized; throws ValidationError on an empty or duplicate canonical name.
    explicit DrugLexicon(std::vector<DrugEntry> entries);

    const std::vector<DrugEntry>& entries() const { return entries_; }
    const DrugEntry* find(std::string_view canonical) const;
    std::size_t size() const { return entries_.size(); }

    /// Indices into entries() of drugs named in the query, ascending and deduplicated.
    std::vector<std::size_t> match_ids(std::string_view normalized_query) const;

private:
    std::vector<DrugEntry> entries_;
    std::unordered_map<std::string, std::size_t> by_canonical_;
    PhraseIndex index_;
};

class SymptomLexicon {
public:
    SymptomLexicon() = default;
    explicit SymptomLexicon(std::vector<std::string> phrases);

    const std::set<std::string>& phrases() const { return phrases_; }
    bool empty() const { return phrases_.empty(); }
    bool contains(std::string_view normalized_query) const;

private:
    std::set<std::string> phrases_;
    PhraseIndex index_;
};

std::set<std::string> match_drugs(std::string_view normalized_query, const DrugLexicon& lexicon);
bool contains_symptom(std::string_view normalized_query, const SymptomLexicon& lexicon);

/// CSV `canonical,brands,rx_otc`. Every malformed row is reported with its line number
/// in a single ParseError.
DrugLexicon read_drug_lexicon(std::istream& in);
void write_drug_lexicon(std::ostream& out, const DrugLexicon& lexicon);

/// One phrase per line; blank lines and `#` comments are ignored.
SymptomLexicon read_symptom_lexicon(std::istream& in);
void write_symptom_lexicon(std::ostream& out, const SymptomLexicon& lexicon);

} // namespace sentinel
