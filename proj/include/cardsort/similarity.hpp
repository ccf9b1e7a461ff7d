#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cardsort/csv.hpp"
#include "cardsort/error.hpp"
#include "cardsort/model.hpp"

namespace cardsort {

// Co-exposure counts: entry(i,j) = number of participants shown both cards
// i and j. Diagonal is 0 by the i = j convention of the pairing/exposure
// indicator functions.
struct ExposureMatrix {
    std::vector<std::string> card_ids;
    std::vector<std::int64_t> counts; // row-major, size M*M

    std::size_t size() const { return card_ids.size(); }
    std::int64_t at(std::size_t i, std::size_t j) const { return counts[i * size() + j]; }
    std::int64_t& at(std::size_t i, std::size_t j) { return counts[i * size() + j]; }
};

// Exposure-normalized pairwise similarity: the ratio of participants who
// grouped cards i and j together to the participants shown both. Entries with
// zero exposure are undefined (NaN), never silently 0: with randomized
// subsets, "never co-shown" and "never paired" are different facts. The
// diagonal is stored as 1 by convention and excluded from every statistic.
struct SimilarityMatrix {
    std::vector<std::string> card_ids;
    std::vector<double> values; // row-major, NaN marks undefined

    std::size_t size() const { return card_ids.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * size() + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * size() + j]; }
    bool defined(std::size_t i, std::size_t j) const { return !std::isnan(at(i, j)); }
};

inline std::pair<SimilarityMatrix, ExposureMatrix> compute_similarity(const StudyData& data) {
    const std::size_t m = data.card_count();
    const auto index = data.card_index();

    SimilarityMatrix sim;
    ExposureMatrix exposure;
    sim.card_ids.reserve(m);
    for (const auto& card : data.cards) sim.card_ids.push_back(card.id);
    exposure.card_ids = sim.card_ids;
    sim.values.assign(m * m, 0.0);
    exposure.counts.assign(m * m, 0);

    std::vector<std::int64_t> paired(m * m, 0);
    std::vector<std::size_t> shown_idx;
    std::vector<std::size_t> member_idx;
    for (const auto& rec : data.records) {
        shown_idx.clear();
        for (const auto& id : rec.shown) shown_idx.push_back(index.at(id));
        for (std::size_t a = 0; a < shown_idx.size(); ++a)
            for (std::size_t b = a + 1; b < shown_idx.size(); ++b) {
                ++exposure.at(shown_idx[a], shown_idx[b]);
                ++exposure.at(shown_idx[b], shown_idx[a]);
            }
        for (const auto& cat : rec.categories) {
            member_idx.clear();
            for (const auto& id : cat.cards) member_idx.push_back(index.at(id));
            for (std::size_t a = 0; a < member_idx.size(); ++a)
                for (std::size_t b = a + 1; b < member_idx.size(); ++b) {
                    ++paired[member_idx[a] * m + member_idx[b]];
                    ++paired[member_idx[b] * m + member_idx[a]];
                }
        }
    }

    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) {
                sim.at(i, j) = 1.0;
            } else if (exposure.at(i, j) == 0) {
                sim.at(i, j) = std::numeric_limits<double>::quiet_NaN();
            } else {
                sim.at(i, j) = static_cast<double>(paired[i * m + j]) /
                               static_cast<double>(exposure.at(i, j));
            }
        }
    }
    return {std::move(sim), std::move(exposure)};
}

// Dense dissimilarity D(i,j) = 1 - S(i,j), with undefined entries replaced by
// 1 - impute and the diagonal fixed at 0. Rows of this matrix are the feature
// vectors used for clustering.
struct DissimilarityMatrix {
    std::vector<std::string> card_ids;
    std::vector<double> values; // row-major, fully defined

    std::size_t size() const { return card_ids.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * size() + j]; }
    const double* row(std::size_t i) const { return values.data() + i * size(); }
};

inline DissimilarityMatrix to_dissimilarity(const SimilarityMatrix& sim, double impute) {
    DissimilarityMatrix d;
    d.card_ids = sim.card_ids;
    const std::size_t m = sim.size();
    d.values.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            const double s = sim.at(i, j);
            d.values[i * m + j] = std::isnan(s) ? 1.0 - impute : 1.0 - s;
        }
    return d;
}

// Header row/column of card ids; undefined entries serialized as empty cells.
inline std::string similarity_to_csv(const SimilarityMatrix& sim) {
    std::string out = "card_id";
    for (const auto& id : sim.card_ids) out += "," + csv::quote(id);
    out += "\n";
    for (std::size_t i = 0; i < sim.size(); ++i) {
        out += csv::quote(sim.card_ids[i]);
        for (std::size_t j = 0; j < sim.size(); ++j) {
            out += ",";
            if (sim.defined(i, j)) out += csv::format_double(sim.at(i, j));
        }
        out += "\n";
    }
    return out;
}

inline std::string exposure_to_csv(const ExposureMatrix& exposure) {
    std::string out = "card_id";
    for (const auto& id : exposure.card_ids) out += "," + csv::quote(id);
    out += "\n";
    for (std::size_t i = 0; i < exposure.size(); ++i) {
        out += csv::quote(exposure.card_ids[i]);
        for (std::size_t j = 0; j < exposure.size(); ++j)
            out += "," + std::to_string(exposure.at(i, j));
        out += "\n";
    }
    return out;
}

inline SimilarityMatrix similarity_from_csv(const std::string& path) {
    const auto rows = csv::read_rows(path);
    if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "card_id")
        fail(ErrorCode::parse_error, path + ": expected similarity matrix header");
    SimilarityMatrix sim;
    sim.card_ids.assign(rows[0].begin() + 1, rows[0].end());
    const std::size_t m = sim.card_ids.size();
    if (rows.size() != m + 1)
        fail(ErrorCode::parse_error, path + ": row count does not match header");
    sim.values.assign(m * m, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < m; ++i) {
        const auto& row = rows[i + 1];
        if (row.size() != m + 1 || row[0] != sim.card_ids[i])
            fail(ErrorCode::parse_error, path + ": malformed row " + std::to_string(i + 1));
        for (std::size_t j = 0; j < m; ++j)
            if (!row[j + 1].empty()) sim.at(i, j) = csv::parse_double(row[j + 1], path);
    }
    return sim;
}

} // namespace cardsort
