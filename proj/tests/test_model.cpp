#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "cardsort/io.hpp"
#include "cardsort/model.hpp"
#include "cardsort/rng.hpp"
#include "helpers.hpp"

using namespace cardsort;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / name;
}

StudyData two_participant_fixture() {
    StudyData data = testutil::make_study(3, "fixture");
    data.records.push_back(testutil::make_record(
        "alice", {"c0", "c1", "c2"}, {Category{"first", {"c0", "c1"}}, Category{"rest", {"c2"}}}));
    auto rec = testutil::make_record("bob", {"c0", "c1", "c2"},
                                     {Category{"everything", {"c0", "c1", "c2"}}});
    rec.duration_seconds = 42.5;
    rec.covariates["crt"] = 2;
    data.records.push_back(rec);
    return data;
}

} // namespace

TEST_CASE("json ingestion round-trips a two-participant study") {
    const StudyData data = two_participant_fixture();
    const auto path = temp_file("model_roundtrip.json");
    emit_study(data, path.string());
    const StudyData back = ingest_study(path.string(), StudyFormat::json);
    CHECK(back == data);
    CHECK(back.record_count() == 2);
    CHECK(back.card_count() == 3);
}

TEST_CASE("ingestion round-trips generated studies") {
    Rng rng(2024);
    for (int trial = 0; trial < 25; ++trial) {
        const StudyData data = testutil::random_study(rng);
        const auto path = temp_file("model_roundtrip_gen.json");
        emit_study(data, path.string());
        CHECK(ingest_study(path.string(), StudyFormat::json) == data);
    }
}

TEST_CASE("validation rejects member cards outside the shown set") {
    StudyData data = testutil::make_study(3);
    auto rec = testutil::make_record("p", {"c0", "c1"}, {Category{"g", {"c0", "c2"}}});
    data.records.push_back(rec);
    try {
        validate_study(data);
        FAIL("expected ValidationError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::validation_error);
        CHECK(std::string(e.what()).find("record 0") != std::string::npos);
    }
}

TEST_CASE("validation rejects every injected violation") {
    Rng rng(777);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        StudyData data = testutil::random_study(rng);
        if (data.records.empty()) continue;
        const auto which = rng.uniform_below(4);
        auto& rec = data.records[rng.uniform_below(data.records.size())];
        switch (which) {
            case 0: // member not shown
                rec.categories.push_back(Category{"zz", {"ghost"}});
                data.cards.push_back(Card{"ghost", "Ghost"});
                break;
            case 1: // card in two categories
                if (rec.categories.empty() || rec.categories[0].cards.empty()) continue;
                rec.categories.push_back(Category{"dup", {rec.categories[0].cards[0]}});
                break;
            case 2: // duplicate category label after trimming
                if (rec.categories.empty()) continue;
                rec.categories.push_back(Category{" " + rec.categories[0].label + " ",
                                                  {}});
                break;
            default: // shown card outside the card set
                rec.shown.push_back("not-a-card");
                break;
        }
        ++checked;
        CHECK_THROWS_AS(validate_study(data), Error);
    }
    CHECK(checked >= 40);
}

TEST_CASE("validation rejects duplicate card ids and empty labels") {
    StudyData data = testutil::make_study(2);
    data.records.push_back(testutil::make_record("p", {"c0"}, {}));
    data.cards.push_back(Card{"c0", "Duplicate"});
    CHECK_THROWS_AS(validate_study(data), Error);

    StudyData blank = testutil::make_study(2);
    blank.cards[1].label = "";
    blank.records.push_back(testutil::make_record("p", {"c0"}, {}));
    CHECK_THROWS_AS(validate_study(blank), Error);
}

TEST_CASE("filter_records keeps cards and matches predicates") {
    const StudyData data = two_participant_fixture();

    const StudyData all = filter_records(data, [](const SortRecord&) { return true; });
    CHECK(all == data);

    const StudyData none = filter_records(data, [](const SortRecord&) { return false; });
    CHECK(none.record_count() == 0);
    CHECK(none.cards == data.cards);

    StudyData scored = testutil::make_study(2, "crt");
    for (int i = 0; i < 4; ++i) {
        auto rec = testutil::make_record("p" + std::to_string(i), {"c0", "c1"},
                                         {Category{"g", {"c0", "c1"}}});
        rec.covariates["crt"] = i; // scores 0,1,2,3
        scored.records.push_back(rec);
    }
    const StudyData high = filter_records(scored, [](const SortRecord& rec) {
        return rec.covariates.at("crt") >= 2;
    });
    CHECK(high.record_count() == 2);
}

TEST_CASE("csv ingestion reads the long format with sidecars") {
    const auto dir = fs::temp_directory_path();
    const auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
    };
    write("csvstudy.csv",
          "participant,card_id,category_label\n"
          "alice,c0,first\nalice,c1,first\nalice,c2,rest\n"
          "bob,c0,everything\nbob,c1,everything\nbob,c2,everything\n");
    write("csvstudy.shown.csv",
          "participant,card_id\n"
          "alice,c0\nalice,c1\nalice,c2\nbob,c0\nbob,c1\nbob,c2\n");
    write("csvstudy.covariates.csv",
          "participant,name,value\nalice,crt,1\nbob,crt,3\nbob,duration_seconds,42.5\n");
    write("csvstudy.cards.csv", "card_id,label\nc0,Card 0\nc1,Card 1\nc2,Card 2\n");

    const StudyData data = ingest_study((dir / "csvstudy.csv").string(), StudyFormat::csv);
    CHECK(data.condition_name == "csvstudy");
    CHECK(data.card_count() == 3);
    CHECK(data.record_count() == 2);
    CHECK(data.records[1].duration_seconds == 42.5);
    CHECK(data.records[1].covariates.at("crt") == 3);
    CHECK(data.records[0].categories.size() == 2);
}

TEST_CASE("malformed json reports a parse error") {
    const auto path = temp_file("broken.json");
    std::ofstream(path) << "{ not json";
    try {
        ingest_study(path.string(), StudyFormat::json);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse_error);
    }
}

TEST_CASE("bundled e-commerce fixture has the 50-card appendix set") {
    const StudyData data =
        ingest_study(std::string(CARDSORT_DATA_DIR) + "/ecommerce_demo.json", StudyFormat::json);
    CHECK(data.card_count() == 50);
    bool has_air_conditioners = false;
    for (const auto& card : data.cards)
        if (card.label == "Air Conditioners") has_air_conditioners = true;
    CHECK(has_air_conditioners);
}

TEST_CASE("bundled banking fixture has the 50-card appendix set") {
    const StudyData data =
        ingest_study(std::string(CARDSORT_DATA_DIR) + "/banking_demo.json", StudyFormat::json);
    CHECK(data.card_count() == 50);
}
