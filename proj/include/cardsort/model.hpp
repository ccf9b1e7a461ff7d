#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cardsort/error.hpp"

namespace cardsort {

struct Card {
    std::string id;    // stable identifier, unique within a card set
    std::string label; // display text, free form
};

struct Category {
    std::string label;
    std::vector<std::string> cards; // card ids, each a member of the record's shown set
};

struct SortRecord {
    std::string participant_id;
    std::vector<std::string> shown; // card ids presented to this participant
    std::vector<Category> categories;
    double duration_seconds = 0.0;
    std::map<std::string, double> covariates; // e.g. trait scores, CRT, Likert ratings
};

// A card set plus per-participant sort records. Immutable after construction;
// all analyses take read-only views. Cards shown but placed in no category are
// permitted: they count toward co-exposure but toward no pairing.
struct StudyData {
    std::string condition_name;
    std::vector<Card> cards;
    std::vector<SortRecord> records;

    std::size_t card_count() const { return cards.size(); }
    std::size_t record_count() const { return records.size(); }

    // Index of each card id in the card order; the index order is the matrix
    // row/column order used by every derived structure.
    std::unordered_map<std::string, std::size_t> card_index() const {
        std::unordered_map<std::string, std::size_t> index;
        index.reserve(cards.size());
        for (std::size_t i = 0; i < cards.size(); ++i) index.emplace(cards[i].id, i);
        return index;
    }

    bool is_full_set() const {
        for (const auto& rec : records)
            if (rec.shown.size() != cards.size()) return false;
        return true;
    }
};

// Enforces every structural invariant. Record-level failures carry the record
// index and participant id in the message.
inline void validate_study(const StudyData& data) {
    if (data.cards.size() < 2)
        fail(ErrorCode::validation_error, "card set must contain at least 2 cards");
    if (data.records.empty())
        fail(ErrorCode::validation_error, "study must contain at least 1 record");

    std::unordered_set<std::string> ids;
    for (const auto& card : data.cards) {
        if (card.id.empty()) fail(ErrorCode::validation_error, "card with empty id");
        if (card.label.empty())
            fail(ErrorCode::validation_error, "card '" + card.id + "' has empty label");
        if (!ids.insert(card.id).second)
            fail(ErrorCode::validation_error, "duplicate card id '" + card.id + "'");
    }

    std::unordered_set<std::string> participants;
    for (std::size_t r = 0; r < data.records.size(); ++r) {
        const auto& rec = data.records[r];
        const std::string where = "record " + std::to_string(r) + " (participant '" +
                                  rec.participant_id + "')";
        if (rec.participant_id.empty())
            fail(ErrorCode::validation_error, "record " + std::to_string(r) +
                                                  ": empty participant id");
        if (!participants.insert(rec.participant_id).second)
            fail(ErrorCode::validation_error, where + ": duplicate participant id");
        if (rec.duration_seconds < 0)
            fail(ErrorCode::validation_error, where + ": negative duration");

        std::unordered_set<std::string> shown;
        for (const auto& id : rec.shown) {
            if (!ids.count(id))
                fail(ErrorCode::validation_error,
                     where + ": shown card '" + id + "' not in card set");
            if (!shown.insert(id).second)
                fail(ErrorCode::validation_error, where + ": card '" + id + "' shown twice");
        }

        std::unordered_set<std::string> placed;
        std::unordered_set<std::string> labels;
        for (const auto& cat : rec.categories) {
            std::string trimmed = cat.label;
            const auto b = trimmed.find_first_not_of(" \t");
            const auto e = trimmed.find_last_not_of(" \t");
            trimmed = b == std::string::npos ? std::string() : trimmed.substr(b, e - b + 1);
            if (!labels.insert(trimmed).second)
                fail(ErrorCode::validation_error,
                     where + ": duplicate category label '" + trimmed + "'");
            for (const auto& id : cat.cards) {
                if (!shown.count(id))
                    fail(ErrorCode::validation_error,
                         where + ": card '" + id + "' placed but not shown");
                if (!placed.insert(id).second)
                    fail(ErrorCode::validation_error,
                         where + ": card '" + id + "' placed in more than one category");
            }
        }
    }
}

// New StudyData containing exactly the records matching the predicate; the
// card set and condition name are unchanged. An empty result is allowed, so
// the output may not satisfy the ingest-time N >= 1 invariant.
inline StudyData filter_records(const StudyData& data,
                                const std::function<bool(const SortRecord&)>& predicate) {
    StudyData out;
    out.condition_name = data.condition_name;
    out.cards = data.cards;
    for (const auto& rec : data.records)
        if (predicate(rec)) out.records.push_back(rec);
    return out;
}

inline StudyData select_records(const StudyData& data, const std::vector<std::size_t>& indices) {
    StudyData out;
    out.condition_name = data.condition_name;
    out.cards = data.cards;
    out.records.reserve(indices.size());
    for (std::size_t i : indices) out.records.push_back(data.records[i]);
    return out;
}

inline bool operator==(const Card& a, const Card& b) {
    return a.id == b.id && a.label == b.label;
}
inline bool operator==(const Category& a, const Category& b) {
    return a.label == b.label && a.cards == b.cards;
}
inline bool operator==(const SortRecord& a, const SortRecord& b) {
    return a.participant_id == b.participant_id && a.shown == b.shown &&
           a.categories == b.categories && a.duration_seconds == b.duration_seconds &&
           a.covariates == b.covariates;
}
inline bool operator==(const StudyData& a, const StudyData& b) {
    return a.condition_name == b.condition_name && a.cards == b.cards && a.records == b.records;
}

} // namespace cardsort
