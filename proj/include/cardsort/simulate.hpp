#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "cardsort/error.hpp"
#include "cardsort/model.hpp"
#include "cardsort/rng.hpp"

namespace cardsort {

// Synthetic study generator with a known ground-truth partition. Cards are
// assigned round-robin to themes (near-equal theme sizes); each participant
// sees a uniform random subset, sorts it by ground truth, optionally splits
// themes in two, then misfiles each card with probability noise_epsilon into
// a uniformly chosen other theme.
struct SimConfig {
    int card_count = 50;
    int theme_count = 6;
    int subset_size = 50; // = card_count for full-set studies
    int participants = 40;
    double noise_epsilon = 0.0; // per-card probability of reassignment
    double split_prob = 0.0;    // per-theme probability a participant splits it
    std::uint64_t seed = 0;
};

struct SimulatedStudy {
    StudyData data;
    std::map<std::string, int> ground_truth; // card id -> theme index
};

inline void validate_config(const SimConfig& config) {
    if (config.card_count < 2) fail(ErrorCode::invalid_config, "card_count must be >= 2");
    if (config.theme_count < 1 || config.theme_count > config.card_count)
        fail(ErrorCode::invalid_config, "theme_count must be in [1, card_count]");
    if (config.subset_size < 1 || config.subset_size > config.card_count)
        fail(ErrorCode::invalid_config, "subset_size must be in [1, card_count]");
    if (config.participants < 1) fail(ErrorCode::invalid_config, "participants must be >= 1");
    if (config.noise_epsilon < 0 || config.noise_epsilon > 1)
        fail(ErrorCode::invalid_config, "noise_epsilon must be in [0, 1]");
    if (config.split_prob < 0 || config.split_prob > 1)
        fail(ErrorCode::invalid_config, "split_prob must be in [0, 1]");
}

inline std::string sim_card_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "card-%03d", index);
    return buf;
}

// Deterministic given the seed: participant p draws from substream p of the
// study seed, so generation order (or parallelism) cannot change the output.
inline SimulatedStudy simulate_study(const SimConfig& config) {
    validate_config(config);

    SimulatedStudy out;
    out.data.condition_name = config.subset_size == config.card_count ? "sim-full" : "sim-subset";

    for (int i = 0; i < config.card_count; ++i) {
        const std::string id = sim_card_id(i);
        out.data.cards.push_back(Card{id, id});
        out.ground_truth[id] = i % config.theme_count;
    }

    const Rng study_rng(config.seed);
    for (int p = 0; p < config.participants; ++p) {
        Rng rng = study_rng.substream(static_cast<std::uint64_t>(p));

        std::vector<int> deck(config.card_count);
        std::iota(deck.begin(), deck.end(), 0);
        rng.shuffle(deck);
        deck.resize(static_cast<std::size_t>(config.subset_size));
        std::sort(deck.begin(), deck.end());

        SortRecord rec;
        char pid[16];
        std::snprintf(pid, sizeof(pid), "p%04d", p);
        rec.participant_id = pid;
        for (int card : deck) rec.shown.push_back(sim_card_id(card));

        // theme index -> cards of that theme in this participant's subset
        std::map<int, std::vector<int>> themed;
        for (int card : deck) themed[card % config.theme_count].push_back(card);

        // label -> members, label order fixed by first creation
        std::vector<Category> categories;
        auto place = [&](const std::string& label, int card) {
            for (auto& cat : categories)
                if (cat.label == label) {
                    cat.cards.push_back(sim_card_id(card));
                    return;
                }
            categories.push_back(Category{label, {sim_card_id(card)}});
        };

        for (auto& [theme, members] : themed) {
            const std::string base = "theme-" + std::to_string(theme);
            bool split = members.size() >= 2 && config.split_prob > 0 &&
                         rng.bernoulli(config.split_prob);
            std::size_t split_at = members.size();
            if (split) {
                std::vector<int> shuffled = members;
                rng.shuffle(shuffled);
                members = shuffled;
                split_at = (members.size() + 1) / 2;
            }
            for (std::size_t i = 0; i < members.size(); ++i) {
                const int card = members[i];
                std::string label = i < split_at ? base : base + "-b";
                if (config.noise_epsilon > 0 && rng.bernoulli(config.noise_epsilon) &&
                    config.theme_count > 1) {
                    int other = static_cast<int>(
                        rng.uniform_below(static_cast<std::uint64_t>(config.theme_count - 1)));
                    if (other >= theme) ++other;
                    label = "theme-" + std::to_string(other);
                }
                place(label, card);
            }
        }

        rec.categories = std::move(categories);
        out.data.records.push_back(std::move(rec));
    }
    return out;
}

} // namespace cardsort
