#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cardsort/csv.hpp"
#include "cardsort/error.hpp"
#include "cardsort/model.hpp"

namespace cardsort {

enum class StudyFormat { json, csv };

namespace detail {

inline nlohmann::ordered_json study_to_json(const StudyData& data) {
    nlohmann::ordered_json j;
    j["condition"] = data.condition_name;
    j["cards"] = nlohmann::ordered_json::array();
    for (const auto& card : data.cards)
        j["cards"].push_back({{"id", card.id}, {"label", card.label}});
    j["records"] = nlohmann::ordered_json::array();
    for (const auto& rec : data.records) {
        nlohmann::ordered_json r;
        r["participant"] = rec.participant_id;
        r["shown"] = rec.shown;
        r["duration_seconds"] = rec.duration_seconds;
        r["covariates"] = nlohmann::ordered_json::object();
        for (const auto& [name, value] : rec.covariates) r["covariates"][name] = value;
        r["categories"] = nlohmann::ordered_json::array();
        for (const auto& cat : rec.categories)
            r["categories"].push_back({{"label", cat.label}, {"cards", cat.cards}});
        j["records"].push_back(std::move(r));
    }
    return j;
}

inline StudyData study_from_json(const nlohmann::json& j) {
    StudyData data;
    try {
        data.condition_name = j.value("condition", std::string());
        for (const auto& cj : j.at("cards")) {
            Card card;
            card.id = cj.at("id").get<std::string>();
            card.label = cj.at("label").get<std::string>();
            data.cards.push_back(std::move(card));
        }
        for (const auto& rj : j.at("records")) {
            SortRecord rec;
            rec.participant_id = rj.at("participant").get<std::string>();
            rec.shown = rj.at("shown").get<std::vector<std::string>>();
            rec.duration_seconds = rj.value("duration_seconds", 0.0);
            if (rj.contains("covariates"))
                for (const auto& [name, value] : rj.at("covariates").items())
                    rec.covariates[name] = value.get<double>();
            if (rj.contains("categories"))
                for (const auto& cj : rj.at("categories")) {
                    Category cat;
                    cat.label = cj.at("label").get<std::string>();
                    cat.cards = cj.at("cards").get<std::vector<std::string>>();
                    rec.categories.push_back(std::move(cat));
                }
            data.records.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::parse_error, std::string("study json: ") + e.what());
    }
    return data;
}

// CSV study layout, sidecars located next to the sorts file:
//   <stem>.csv            participant, card_id, category_label
//   <stem>.shown.csv      participant, card_id
//   <stem>.covariates.csv participant, name, value  (optional; the reserved
//                         name "duration_seconds" feeds the duration field)
//   <stem>.cards.csv      card_id, label            (optional; inferred from
//                         shown-card ids with label = id when absent)
inline StudyData study_from_csv(const std::string& path) {
    namespace fs = std::filesystem;
    const fs::path sorts_path(path);
    fs::path base = sorts_path;
    base.replace_extension();
    const std::string stem = base.string();

    StudyData data;
    data.condition_name = base.filename().string();

    std::map<std::string, SortRecord> by_participant;
    std::vector<std::string> order;
    auto record_for = [&](const std::string& pid) -> SortRecord& {
        auto it = by_participant.find(pid);
        if (it == by_participant.end()) {
            order.push_back(pid);
            it = by_participant.emplace(pid, SortRecord{}).first;
            it->second.participant_id = pid;
        }
        return it->second;
    };

    const std::string shown_path = stem + ".shown.csv";
    for (std::size_t i = 1; const auto& row : csv::read_rows(shown_path)) {
        if (row.size() != 2)
            fail(ErrorCode::parse_error, shown_path + ": expected 2 columns");
        if (i++ == 1 && row[0] == "participant") continue;
        record_for(row[0]).shown.push_back(row[1]);
    }

    for (std::size_t i = 1; const auto& row : csv::read_rows(path)) {
        if (row.size() != 3)
            fail(ErrorCode::parse_error, path + ": expected 3 columns");
        if (i++ == 1 && row[0] == "participant") continue;
        auto& rec = record_for(row[0]);
        auto it = std::find_if(rec.categories.begin(), rec.categories.end(),
                               [&](const Category& c) { return c.label == row[2]; });
        if (it == rec.categories.end()) {
            rec.categories.push_back(Category{row[2], {}});
            it = std::prev(rec.categories.end());
        }
        it->cards.push_back(row[1]);
    }

    const std::string cov_path = stem + ".covariates.csv";
    if (fs::exists(cov_path)) {
        for (std::size_t i = 1; const auto& row : csv::read_rows(cov_path)) {
            if (row.size() != 3)
                fail(ErrorCode::parse_error, cov_path + ": expected 3 columns");
            if (i++ == 1 && row[0] == "participant") continue;
            auto& rec = record_for(row[0]);
            const double value = csv::parse_double(row[2], cov_path);
            if (row[1] == "duration_seconds")
                rec.duration_seconds = value;
            else
                rec.covariates[row[1]] = value;
        }
    }

    const std::string cards_path = stem + ".cards.csv";
    if (fs::exists(cards_path)) {
        for (std::size_t i = 1; const auto& row : csv::read_rows(cards_path)) {
            if (row.size() != 2)
                fail(ErrorCode::parse_error, cards_path + ": expected 2 columns");
            if (i++ == 1 && row[0] == "card_id") continue;
            data.cards.push_back(Card{row[0], row[1]});
        }
    } else {
        std::set<std::string> ids;
        for (const auto& pid : order)
            for (const auto& id : by_participant[pid].shown) ids.insert(id);
        for (const auto& id : ids) data.cards.push_back(Card{id, id});
    }

    for (const auto& pid : order) data.records.push_back(std::move(by_participant[pid]));
    return data;
}

} // namespace detail

// Parses and validates a study file. Throws ParseError on malformed input and
// ValidationError (with record index and reason) on invariant violations.
inline StudyData ingest_study(const std::string& path, StudyFormat format) {
    StudyData data;
    if (format == StudyFormat::json) {
        std::ifstream in(path);
        if (!in) fail(ErrorCode::io_error, "cannot open " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::parse_error, path + ": " + e.what());
        }
        data = detail::study_from_json(j);
    } else {
        data = detail::study_from_csv(path);
    }
    validate_study(data);
    return data;
}

inline StudyFormat guess_format(const std::string& path) {
    return path.size() >= 4 && path.substr(path.size() - 4) == ".csv" ? StudyFormat::csv
                                                                      : StudyFormat::json;
}

inline StudyData ingest_study(const std::string& path) {
    return ingest_study(path, guess_format(path));
}

inline std::string emit_study_json(const StudyData& data) {
    return detail::study_to_json(data).dump(2) + "\n";
}

inline void emit_study(const StudyData& data, const std::string& path) {
    csv::write_file(path, emit_study_json(data));
}

} // namespace cardsort
