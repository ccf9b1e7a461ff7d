#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cardsort/csv.hpp"
#include "cardsort/error.hpp"
#include "cardsort/model.hpp"

namespace cardsort {

enum class UnmappedPolicy { unstandardized, error };

// Researcher-authored mapping from (participant, raw category label) to a
// standardized theme. Standardization is a human judgment call; this module
// applies it, it does not induce it.
struct StandardizationMap {
    std::map<std::pair<std::string, std::string>, std::string> entries;
    UnmappedPolicy policy = UnmappedPolicy::unstandardized;
};

struct ThemeSummary {
    std::string theme;
    int m = 0;                                    // unique cards placed in the theme
    int r = 0;                                    // respondents contributing
    std::map<std::string, int> per_card_counts;   // card id -> p_k
    std::vector<std::string> contributors;        // participant ids, sorted
    double agreement = 0;                         // (100 / (m*r)) * sum p_k
};

struct StandardizationResult {
    std::vector<ThemeSummary> themes; // sorted by theme name
    int unstandardized_count = 0;     // categories with no mapping
};

// CSV columns: participant_id, raw_label, theme (header row required).
inline StandardizationMap standardization_from_csv(const std::string& path,
                                                   UnmappedPolicy policy) {
    const auto rows = csv::read_rows(path);
    if (rows.empty() ||
        rows[0] != std::vector<std::string>{"participant_id", "raw_label", "theme"})
        fail(ErrorCode::parse_error,
             path + ": expected header participant_id,raw_label,theme");
    StandardizationMap map;
    map.policy = policy;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != 3)
            fail(ErrorCode::parse_error, path + ": malformed row " + std::to_string(i + 1));
        if (row[2].empty())
            fail(ErrorCode::parse_error, path + ": empty theme name at row " + std::to_string(i + 1));
        map.entries[{row[0], csv::trim(row[1])}] = row[2];
    }
    return map;
}

// Merges raw categories into themes and scores each theme's agreement:
// A_c = (100 / (m*r)) * sum over cards of p_k, where p_k counts respondents
// who placed card k in the theme. A participant contributing several raw
// categories mapped to one theme counts once in r, and each of their card
// placements counts once in p_k.
inline StandardizationResult apply_standardization(const StudyData& data,
                                                   const StandardizationMap& map) {
    struct Accumulator {
        std::set<std::string> contributors;
        std::map<std::string, std::set<std::string>> card_placers; // card -> participants
    };
    std::map<std::string, Accumulator> themes;
    int unmapped = 0;

    for (const auto& rec : data.records) {
        for (const auto& cat : rec.categories) {
            const auto it = map.entries.find({rec.participant_id, csv::trim(cat.label)});
            if (it == map.entries.end()) {
                if (map.policy == UnmappedPolicy::error)
                    fail(ErrorCode::unmapped_category,
                         "no standardization for participant '" + rec.participant_id +
                             "' category '" + cat.label + "'");
                ++unmapped;
                continue;
            }
            auto& acc = themes[it->second];
            acc.contributors.insert(rec.participant_id);
            for (const auto& card : cat.cards)
                acc.card_placers[card].insert(rec.participant_id);
        }
    }

    StandardizationResult result;
    result.unstandardized_count = unmapped;
    for (const auto& [name, acc] : themes) {
        ThemeSummary summary;
        summary.theme = name;
        summary.m = static_cast<int>(acc.card_placers.size());
        summary.r = static_cast<int>(acc.contributors.size());
        summary.contributors.assign(acc.contributors.begin(), acc.contributors.end());
        std::int64_t total = 0;
        for (const auto& [card, placers] : acc.card_placers) {
            summary.per_card_counts[card] = static_cast<int>(placers.size());
            total += static_cast<std::int64_t>(placers.size());
        }
        summary.agreement = summary.m > 0 && summary.r > 0
                                ? 100.0 * static_cast<double>(total) /
                                      (static_cast<double>(summary.m) * summary.r)
                                : 0.0;
        result.themes.push_back(std::move(summary));
    }
    return result;
}

// Themes by contributing participant count, descending; ties by theme name.
// Themes below the minimum-participant threshold are dropped.
inline std::vector<std::pair<std::string, int>> theme_frequency(
    const std::vector<ThemeSummary>& summaries, int min_participants = 0) {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& summary : summaries)
        if (summary.r >= min_participants) out.emplace_back(summary.theme, summary.r);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

inline std::string themes_to_csv(const StandardizationResult& result) {
    std::string out = "theme,m,r,agreement,contributing_participants\n";
    for (const auto& theme : result.themes) {
        std::string who;
        for (const auto& pid : theme.contributors) {
            if (!who.empty()) who += ";";
            who += pid;
        }
        out += csv::quote(theme.theme) + "," + std::to_string(theme.m) + "," +
               std::to_string(theme.r) + "," + csv::format_double(theme.agreement) + "," +
               csv::quote(who) + "\n";
    }
    return out;
}

} // namespace cardsort
