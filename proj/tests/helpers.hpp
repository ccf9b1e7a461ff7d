#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "cardsort/model.hpp"
#include "cardsort/rng.hpp"
#include "cardsort/similarity.hpp"

namespace testutil {

using cardsort::Card;
using cardsort::Category;
using cardsort::Rng;
using cardsort::SortRecord;
using cardsort::StudyData;

inline StudyData make_study(int card_count, const std::string& condition = "test") {
    StudyData data;
    data.condition_name = condition;
    for (int i = 0; i < card_count; ++i) {
        const std::string id = "c" + std::to_string(i);
        data.cards.push_back(Card{id, "Card " + std::to_string(i)});
    }
    return data;
}

inline SortRecord make_record(const std::string& pid, std::vector<std::string> shown,
                              std::vector<Category> categories) {
    SortRecord rec;
    rec.participant_id = pid;
    rec.shown = std::move(shown);
    rec.categories = std::move(categories);
    return rec;
}

// The worked three-participant study: P1 shown {A,B,C} groups {A,B},{C};
// P2 shown {A,B} groups {A,B}; P3 shown {A,C} groups {A},{C}.
inline StudyData three_participant_study() {
    StudyData data;
    data.condition_name = "worked-example";
    data.cards = {Card{"A", "Card A"}, Card{"B", "Card B"}, Card{"C", "Card C"}};
    data.records.push_back(make_record("p1", {"A", "B", "C"},
                                       {Category{"g1", {"A", "B"}}, Category{"g2", {"C"}}}));
    data.records.push_back(make_record("p2", {"A", "B"}, {Category{"g1", {"A", "B"}}}));
    data.records.push_back(
        make_record("p3", {"A", "C"}, {Category{"g1", {"A"}}, Category{"g2", {"C"}}}));
    return data;
}

// Uniformly random study: each participant sees a random subset and places
// each shown card into one of a few categories (possibly leaving it unsorted).
inline StudyData random_study(Rng& rng, int max_cards = 8, int max_records = 6) {
    const int m = 2 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(max_cards - 1)));
    const int n = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(max_records)));
    StudyData data = make_study(m, "random");
    for (int p = 0; p < n; ++p) {
        std::vector<int> deck(static_cast<std::size_t>(m));
        std::iota(deck.begin(), deck.end(), 0);
        rng.shuffle(deck);
        const int shown_count = 2 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(m - 1)));
        deck.resize(static_cast<std::size_t>(shown_count));
        SortRecord rec;
        rec.participant_id = "p" + std::to_string(p);
        const int groups = 1 + static_cast<int>(rng.uniform_below(4));
        std::vector<Category> cats(static_cast<std::size_t>(groups));
        for (int g = 0; g < groups; ++g) cats[static_cast<std::size_t>(g)].label = "g" + std::to_string(g);
        for (int card : deck) {
            rec.shown.push_back(data.cards[static_cast<std::size_t>(card)].id);
            if (rng.uniform01() < 0.15) continue; // unsorted card
            const auto g = rng.uniform_below(static_cast<std::uint64_t>(groups));
            cats[static_cast<std::size_t>(g)].cards.push_back(data.cards[static_cast<std::size_t>(card)].id);
        }
        for (auto& cat : cats)
            if (!cat.cards.empty()) rec.categories.push_back(std::move(cat));
        data.records.push_back(std::move(rec));
    }
    return data;
}

// Independent double-loop similarity counter: for every pair, scan every
// record asking "shown both?" and "same category?". Deliberately structured
// unlike the production per-record accumulation.
struct BruteForceSimilarity {
    std::vector<double> values;
    std::vector<long> exposure;
    std::size_t m = 0;

    double at(std::size_t i, std::size_t j) const { return values[i * m + j]; }
    long exposure_at(std::size_t i, std::size_t j) const { return exposure[i * m + j]; }
};

inline BruteForceSimilarity brute_force_similarity(const StudyData& data) {
    BruteForceSimilarity out;
    out.m = data.card_count();
    out.values.assign(out.m * out.m, std::numeric_limits<double>::quiet_NaN());
    out.exposure.assign(out.m * out.m, 0);
    for (std::size_t i = 0; i < out.m; ++i) {
        for (std::size_t j = 0; j < out.m; ++j) {
            if (i == j) {
                out.values[i * out.m + j] = 1.0;
                continue;
            }
            const std::string& a = data.cards[i].id;
            const std::string& b = data.cards[j].id;
            long shown_both = 0;
            long grouped = 0;
            for (const auto& rec : data.records) {
                const bool has_a =
                    std::find(rec.shown.begin(), rec.shown.end(), a) != rec.shown.end();
                const bool has_b =
                    std::find(rec.shown.begin(), rec.shown.end(), b) != rec.shown.end();
                if (!has_a || !has_b) continue;
                ++shown_both;
                for (const auto& cat : rec.categories) {
                    const bool in_a =
                        std::find(cat.cards.begin(), cat.cards.end(), a) != cat.cards.end();
                    const bool in_b =
                        std::find(cat.cards.begin(), cat.cards.end(), b) != cat.cards.end();
                    if (in_a && in_b) {
                        ++grouped;
                        break;
                    }
                }
            }
            out.exposure[i * out.m + j] = shown_both;
            if (shown_both > 0)
                out.values[i * out.m + j] =
                    static_cast<double>(grouped) / static_cast<double>(shown_both);
        }
    }
    return out;
}

} // namespace testutil
