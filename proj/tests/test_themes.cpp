#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <iterator>

#include "cardsort/rng.hpp"
#include "cardsort/themes.hpp"
#include "helpers.hpp"

using namespace cardsort;
using Catch::Approx;

namespace {

// m = 2 cards, r = 4 respondents, p = {card1: 3, card2: 1}.
StudyData skewed_placement_fixture() {
    StudyData data = testutil::make_study(3, "skewed");
    // card placements per participant: q1..q3 place c0 in "groupA"; q3 also
    // places c1 elsewhere mapped to the same theme via its own label; q4
    // contributes only c1? p_k counts respondents per card.
    data.records.push_back(
        testutil::make_record("q1", {"c0", "c1", "c2"}, {Category{"a", {"c0"}}}));
    data.records.push_back(
        testutil::make_record("q2", {"c0", "c1", "c2"}, {Category{"a", {"c0"}}}));
    data.records.push_back(
        testutil::make_record("q3", {"c0", "c1", "c2"}, {Category{"a", {"c0", "c1"}}}));
    data.records.push_back(
        testutil::make_record("q4", {"c0", "c1", "c2"}, {Category{"a", {"c2"}}}));
    return data;
}

StandardizationMap map_all_to(const StudyData& data, const std::string& theme) {
    StandardizationMap map;
    for (const auto& rec : data.records)
        for (const auto& cat : rec.categories) map.entries[{rec.participant_id, cat.label}] = theme;
    return map;
}

} // namespace

TEST_CASE("agreement follows the card-wise ratio formula") {
    StudyData data = skewed_placement_fixture();
    // theme gets: q1 c0, q2 c0, q3 {c0,c1}, q4 c2 -> m=3... adjust to the
    // worked example by mapping q4's category to a different theme.
    StandardizationMap map = map_all_to(data, "T");
    map.entries[{"q4", "a"}] = "Other";
    const auto result = apply_standardization(data, map);
    REQUIRE(result.themes.size() == 2);
    const auto& t = result.themes[1]; // sorted by name: Other, T
    CHECK(t.theme == "T");
    CHECK(t.m == 2);
    CHECK(t.r == 3);
    CHECK(t.per_card_counts.at("c0") == 3);
    CHECK(t.per_card_counts.at("c1") == 1);
    CHECK(t.agreement == Approx(100.0 / (2 * 3) * 4)); // 66.67
}

TEST_CASE("the worked m=2 r=4 p={3,1} case scores 50") {
    StudyData data = testutil::make_study(2, "worked");
    for (int i = 0; i < 4; ++i) {
        std::vector<std::string> members = {"c0"};
        if (i == 3) members = {"c1"};
        data.records.push_back(testutil::make_record("q" + std::to_string(i), {"c0", "c1"},
                                                     {Category{"g", members}}));
    }
    // p(c0) = 3, p(c1) = 1, m = 2, r = 4 -> 100/(2*4) * 4 = 50
    const auto result = apply_standardization(data, map_all_to(data, "T"));
    REQUIRE(result.themes.size() == 1);
    CHECK(result.themes[0].agreement == Approx(50.0));
}

TEST_CASE("unanimous sorting scores 100 per theme") {
    StudyData data = testutil::make_study(4, "unanimous");
    for (int p = 0; p < 5; ++p)
        data.records.push_back(testutil::make_record(
            "q" + std::to_string(p), {"c0", "c1", "c2", "c3"},
            {Category{"kitchen", {"c0", "c1"}}, Category{"audio", {"c2", "c3"}}}));
    StandardizationMap map;
    for (const auto& rec : data.records) {
        map.entries[{rec.participant_id, "kitchen"}] = "Kitchen";
        map.entries[{rec.participant_id, "audio"}] = "Audio";
    }
    const auto result = apply_standardization(data, map);
    REQUIRE(result.themes.size() == 2);
    for (const auto& theme : result.themes) CHECK(theme.agreement == Approx(100.0));
    CHECK(result.unstandardized_count == 0);
}

TEST_CASE("multiple categories from one participant count once in r and p_k") {
    StudyData data = testutil::make_study(3, "multi");
    data.records.push_back(testutil::make_record(
        "solo", {"c0", "c1", "c2"},
        {Category{"first", {"c0", "c1"}}, Category{"second", {"c2"}}}));
    StandardizationMap map;
    map.entries[{"solo", "first"}] = "T";
    map.entries[{"solo", "second"}] = "T";
    const auto result = apply_standardization(data, map);
    REQUIRE(result.themes.size() == 1);
    CHECK(result.themes[0].r == 1);
    CHECK(result.themes[0].m == 3);
    for (const auto& [card, p] : result.themes[0].per_card_counts) CHECK(p == 1);
    CHECK(result.themes[0].agreement == Approx(100.0));
}

TEST_CASE("unmapped categories follow the policy") {
    StudyData data = skewed_placement_fixture();
    StandardizationMap partial = map_all_to(data, "T");
    partial.entries.erase({"q4", "a"});
    const auto result = apply_standardization(data, partial);
    CHECK(result.unstandardized_count == 1);

    partial.policy = UnmappedPolicy::error;
    CHECK_THROWS_AS(apply_standardization(data, partial), Error);
}

TEST_CASE("agreement is invariant under participant duplication") {
    Rng rng(1);
    StudyData data = testutil::random_study(rng, 6, 5);
    StandardizationMap map;
    for (const auto& rec : data.records)
        for (const auto& cat : rec.categories)
            map.entries[{rec.participant_id, cat.label}] =
                "T" + std::to_string(cat.label.size() % 2);
    const auto base = apply_standardization(data, map);

    StudyData doubled = data;
    for (const auto& rec : data.records) {
        SortRecord copy = rec;
        copy.participant_id = rec.participant_id + "-copy";
        doubled.records.push_back(copy);
        for (const auto& cat : rec.categories)
            map.entries[{copy.participant_id, cat.label}] =
                map.entries.at({rec.participant_id, cat.label});
    }
    const auto dup = apply_standardization(doubled, map);
    REQUIRE(base.themes.size() == dup.themes.size());
    for (std::size_t i = 0; i < base.themes.size(); ++i) {
        CHECK(dup.themes[i].r == 2 * base.themes[i].r);
        CHECK(dup.themes[i].agreement == Approx(base.themes[i].agreement).margin(1e-9));
    }
}

TEST_CASE("sum of per-card counts never exceeds m*r and merging caps agreement") {
    Rng rng(10);
    for (int trial = 0; trial < 25; ++trial) {
        StudyData data = testutil::random_study(rng, 7, 6);
        StandardizationMap split_map;
        for (const auto& rec : data.records)
            for (const auto& cat : rec.categories)
                split_map.entries[{rec.participant_id, cat.label}] =
                    "T" + std::to_string(cat.label.size() % 2);
        const auto split = apply_standardization(data, split_map);
        for (const auto& theme : split.themes) {
            std::int64_t total = 0;
            for (const auto& [card, p] : theme.per_card_counts) total += p;
            CHECK(total <= static_cast<std::int64_t>(theme.m) * theme.r);
            CHECK(theme.agreement > 0);
            CHECK(theme.agreement <= 100.0);
        }
        if (split.themes.size() != 2) continue;
        const auto& a = split.themes[0];
        const auto& b = split.themes[1];
        // disjoint card sets that differ: merging never increases the max
        std::vector<std::string> cards_a, cards_b;
        for (const auto& [card, p] : a.per_card_counts) cards_a.push_back(card);
        for (const auto& [card, p] : b.per_card_counts) cards_b.push_back(card);
        std::vector<std::string> overlap;
        std::set_intersection(cards_a.begin(), cards_a.end(), cards_b.begin(), cards_b.end(),
                              std::back_inserter(overlap));
        if (!overlap.empty() || cards_a == cards_b) continue;
        StandardizationMap merged_map;
        for (const auto& [key, theme] : split_map.entries) merged_map.entries[key] = "M";
        const auto merged = apply_standardization(data, merged_map);
        REQUIRE(merged.themes.size() == 1);
        CHECK(merged.themes[0].agreement <=
              std::max(a.agreement, b.agreement) + 1e-9);
    }
}

TEST_CASE("theme frequency sorts and filters") {
    std::vector<ThemeSummary> summaries(3);
    summaries[0].theme = "beta";
    summaries[0].r = 7;
    summaries[1].theme = "alpha";
    summaries[1].r = 7;
    summaries[2].theme = "gamma";
    summaries[2].r = 3;

    const auto top = theme_frequency(summaries, 4);
    REQUIRE(top.size() == 2);
    CHECK(top[0].first == "alpha"); // tie broken by name
    CHECK(top[1].first == "beta");

    const auto all = theme_frequency(summaries, 0);
    CHECK(all.size() == 3);
}

TEST_CASE("standardization csv parsing and emission") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto path = dir / "stdmap.csv";
    csv::write_file(path.string(),
                    "participant_id,raw_label,theme\nq1,a,T\nq2, a ,T\n");
    const auto map = standardization_from_csv(path.string(), UnmappedPolicy::unstandardized);
    CHECK(map.entries.size() == 2);
    CHECK(map.entries.at({"q2", "a"}) == "T"); // labels compared after trimming

    const auto bad = dir / "stdmap_bad.csv";
    csv::write_file(bad.string(), "who,what\n");
    CHECK_THROWS_AS(standardization_from_csv(bad.string(), UnmappedPolicy::error), Error);

    StudyData data = skewed_placement_fixture();
    const auto result = apply_standardization(data, map_all_to(data, "T"));
    const std::string out = themes_to_csv(result);
    CHECK(out.find("theme,m,r,agreement,contributing_participants") == 0);
    CHECK(out.find("q1;q2;q3;q4") != std::string::npos);
}
