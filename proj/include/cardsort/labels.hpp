#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cardsort/csv.hpp"
#include "cardsort/error.hpp"
#include "cardsort/model.hpp"
#include "cardsort/stats.hpp"

namespace cardsort {

// Rule-based English lemmatizer: an irregular-form lookup followed by plural
// suffix stripping. Category labels are short noun phrases, so plural folding
// is the normalization that matters; no full morphological analysis.
class Lemmatizer {
public:
    Lemmatizer() : exceptions_(default_exceptions()) {}

    explicit Lemmatizer(std::map<std::string, std::string> exceptions)
        : exceptions_(std::move(exceptions)) {}

    // Extra irregulars from a two-column TSV (form<TAB>lemma); entries
    // override the built-in table.
    void load_exceptions(const std::string& path) {
        const std::string text = csv::read_file(path);
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t eol = text.find('\n', pos);
            if (eol == std::string::npos) eol = text.size();
            std::string line = text.substr(pos, eol - pos);
            pos = eol + 1;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos)
                fail(ErrorCode::parse_error, path + ": expected form<TAB>lemma");
            exceptions_[line.substr(0, tab)] = line.substr(tab + 1);
        }
    }

    std::string lemma(const std::string& token) const {
        const auto it = exceptions_.find(token);
        if (it != exceptions_.end()) return it->second;
        const std::size_t n = token.size();
        auto ends_with = [&](std::string_view suffix) {
            return n >= suffix.size() && token.compare(n - suffix.size(), suffix.size(),
                                                       suffix) == 0;
        };
        if (n >= 5 && ends_with("ies")) return token.substr(0, n - 3) + "y";
        if (ends_with("sses") || ends_with("shes") || ends_with("ches") || ends_with("xes") ||
            ends_with("zzes"))
            return token.substr(0, n - 2);
        if (ends_with("s") && !ends_with("ss") && !ends_with("us") && !ends_with("is")) {
            // short words drop the s only after a consonant ("tvs", not "gas")
            auto vowel = [](char c) {
                return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
            };
            if (n >= 4 || (n == 3 && !vowel(token[1]))) return token.substr(0, n - 1);
        }
        return token;
    }

private:
    static std::map<std::string, std::string> default_exceptions() {
        return {
            {"men", "man"},         {"women", "woman"},     {"children", "child"},
            {"people", "person"},   {"mice", "mouse"},      {"geese", "goose"},
            {"feet", "foot"},       {"teeth", "tooth"},     {"knives", "knife"},
            {"wives", "wife"},      {"lives", "life"},      {"leaves", "leaf"},
            {"shelves", "shelf"},   {"halves", "half"},     {"loaves", "loaf"},
            {"buses", "bus"},       {"lenses", "lens"},     {"viruses", "virus"},
            {"bonuses", "bonus"},   {"statuses", "status"}, {"indices", "index"},
            {"matrices", "matrix"}, {"appendices", "appendix"}, {"analyses", "analysis"},
            {"crises", "crisis"},   {"criteria", "criterion"},
        };
    }

    std::map<std::string, std::string> exceptions_;
};

struct TokenCounts {
    std::string condition_name;
    std::map<std::string, std::int64_t> counts;
    std::int64_t total_tokens = 0;
};

// Lowercases, splits on non-alphanumeric runs, lemmatizes, drops empties.
inline std::vector<std::string> tokenize_label(const std::string& label,
                                               const Lemmatizer& lemmatizer = Lemmatizer()) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&]() {
        if (!current.empty()) {
            tokens.push_back(lemmatizer.lemma(current));
            current.clear();
        }
    };
    for (unsigned char c : label) {
        if (std::isalnum(c))
            current.push_back(static_cast<char>(std::tolower(c)));
        else
            flush();
    }
    flush();
    return tokens;
}

// Token counts over every category label in the study (one count per label
// occurrence, across all participants).
inline TokenCounts tokenize_labels(const StudyData& data,
                                   const Lemmatizer& lemmatizer = Lemmatizer()) {
    TokenCounts out;
    out.condition_name = data.condition_name;
    for (const auto& rec : data.records)
        for (const auto& cat : rec.categories)
            for (const auto& token : tokenize_label(cat.label, lemmatizer)) {
                ++out.counts[token];
                ++out.total_tokens;
            }
    return out;
}

// 2x2 chi-squared on the word-vs-rest counts of two conditions.
inline TestResult compare_word(const std::string& word, const TokenCounts& a,
                               const TokenCounts& b) {
    if (word.empty()) fail(ErrorCode::invalid_argument, "compare_word: empty word");
    const auto count = [&](const TokenCounts& tc) {
        const auto it = tc.counts.find(word);
        return it == tc.counts.end() ? std::int64_t{0} : it->second;
    };
    const std::int64_t ca = count(a), cb = count(b);
    return chi_squared({{ca, a.total_tokens - ca}, {cb, b.total_tokens - cb}});
}

// Jaccard index over distinct vocabularies; two empty vocabularies overlap
// perfectly by convention.
inline double vocab_jaccard(const TokenCounts& a, const TokenCounts& b) {
    if (a.counts.empty() && b.counts.empty()) return 1.0;
    std::size_t intersection = 0;
    for (const auto& [word, n] : a.counts) {
        (void)n;
        if (b.counts.count(word)) ++intersection;
    }
    const std::size_t unions = a.counts.size() + b.counts.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unions);
}

// Zipf word frequencies: log10 of occurrences per billion tokens, in [0, 9].
// Out-of-vocabulary words fall back to default_zipf.
struct FrequencyTable {
    std::map<std::string, double> entries;
    double default_zipf = 1.0;

    double zipf(const std::string& word) const {
        const auto it = entries.find(word);
        return it == entries.end() ? default_zipf : it->second;
    }
};

inline FrequencyTable load_frequency_table(const std::string& path, double default_zipf = 1.0) {
    FrequencyTable table;
    table.default_zipf = default_zipf;
    const std::string text = csv::read_file(path);
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            fail(ErrorCode::parse_error,
                 path + ":" + std::to_string(line_no) + ": expected word<TAB>zipf");
        const double zipf = csv::parse_double(line.substr(tab + 1), path);
        if (zipf < 0 || zipf > 9)
            fail(ErrorCode::parse_error,
                 path + ":" + std::to_string(line_no) + ": zipf outside [0, 9]");
        table.entries[line.substr(0, tab)] = zipf;
    }
    return table;
}

// Per-participant label informativeness: the mean of inverted Zipf
// frequencies (9 - zipf) over all of the record's label tokens. Rarer words
// score higher; the theoretical Zipf ceiling maps to 0.
inline double informativeness(const SortRecord& record, const FrequencyTable& freq,
                              const Lemmatizer& lemmatizer = Lemmatizer()) {
    double sum = 0;
    std::int64_t count = 0;
    for (const auto& cat : record.categories)
        for (const auto& token : tokenize_label(cat.label, lemmatizer)) {
            sum += 9.0 - freq.zipf(token);
            ++count;
        }
    if (count == 0)
        fail(ErrorCode::no_tokens,
             "informativeness: participant '" + record.participant_id + "' has no label tokens");
    return sum / static_cast<double>(count);
}

// Counts sorted by descending frequency, ties by word.
inline std::string token_counts_to_csv(const TokenCounts& counts) {
    std::vector<std::pair<std::string, std::int64_t>> rows(counts.counts.begin(),
                                                           counts.counts.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::string out = "word,count\n";
    for (const auto& [word, count] : rows)
        out += csv::quote(word) + "," + std::to_string(count) + "\n";
    return out;
}

} // namespace cardsort
