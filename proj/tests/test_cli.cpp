#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cardsort/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cardsort::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path workdir() {
    const auto dir = fs::temp_directory_path() / "cardsort_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string simulate_study_file(const std::string& name, int cards = 10, int themes = 2,
                                int subset = 10, int n = 6, double eps = 0.1) {
    const auto path = (workdir() / name).string();
    const auto r = run_cli({"simulate", "--cards", std::to_string(cards), "--themes",
                            std::to_string(themes), "--subset", std::to_string(subset), "--n",
                            std::to_string(n), "--epsilon", std::to_string(eps), "--seed", "7",
                            "--out", path});
    REQUIRE(r.code == 0);
    return path;
}

} // namespace

TEST_CASE("help and usage errors") {
    CHECK(run_cli({"--help"}).code == 0);
    CHECK(run_cli({"--version"}).out == "0.1.0\n");

    const auto unknown = run_cli({"samplesize", "--full", "50", "--subset", "30", "--bogus"});
    CHECK(unknown.code == 2);
    CHECK(!unknown.err.empty());

    const auto missing = run_cli({"samplesize", "--full", "50"});
    CHECK(missing.code == 2);

    const auto nothing = run_cli({});
    CHECK(nothing.code == 2);

    for (const std::string sub : {"simmatrix", "cluster", "compare", "bootstrap", "fit",
                                  "samplesize", "cohort", "labels", "themes", "simulate"}) {
        const auto help = run_cli({sub, "--help"});
        CHECK(help.code == 0);
        CHECK(help.out.find(sub) != std::string::npos);
    }
}

TEST_CASE("samplesize prints the formula value") {
    const auto r = run_cli({"samplesize", "--full", "50", "--subset", "30"});
    CHECK(r.code == 0);
    CHECK(r.out == "35\n");

    const auto full = run_cli({"samplesize", "--full", "50", "--subset", "50"});
    CHECK(full.out == "15\n");

    const auto js = run_cli({"samplesize", "--full", "50", "--subset", "30", "--json"});
    const json report = json::parse(js.out);
    CHECK(report["results"]["sample_size"] == 35);

    const auto bad = run_cli({"samplesize", "--full", "30", "--subset", "50"});
    CHECK(bad.code == 1);
}

TEST_CASE("simulate then simmatrix writes matrices and a report") {
    const auto study = simulate_study_file("study_a.json");
    const auto sim_path = (workdir() / "sim.csv").string();
    const auto heat_path = (workdir() / "sim.svg").string();
    const auto r =
        run_cli({"simmatrix", study, "--out", sim_path, "--heatmap", heat_path});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(sim_path));
    CHECK(fs::exists(workdir() / "sim_exposure.csv"));
    CHECK(fs::exists(heat_path));
    const json report = json::parse(r.out);
    CHECK(report["command"] == "simmatrix");
    CHECK(report["results"]["cards"] == 10);
    CHECK(report["tool"] == "cardsort");
}

TEST_CASE("cluster subcommand reports k and assignment") {
    const auto study = simulate_study_file("study_cluster.json", 8, 2, 8, 6, 0.0);
    const auto r = run_cli({"cluster", study, "--seed", "3", "--k-max", "4"});
    REQUIRE(r.code == 0);
    const json report = json::parse(r.out);
    CHECK(report["results"]["k"] == 2); // noiseless two-theme geometry
    CHECK(report["results"]["assignment"].size() == 8);
}

TEST_CASE("compare emits mantel and ami") {
    const auto a = simulate_study_file("cmp_a.json", 9, 3, 9, 7, 0.05);
    const auto b = simulate_study_file("cmp_b.json", 9, 3, 9, 7, 0.05);
    const auto r = run_cli({"compare", a, b, "--permutations", "99", "--seed", "1", "--k-max",
                            "4", "--restarts", "3"});
    REQUIRE(r.code == 0);
    const json report = json::parse(r.out);
    CHECK(report["results"]["mantel"]["statistic_name"] == "mantel_r");
    const double p = report["results"]["mantel"]["p"];
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
    CHECK(report["results"]["ami"].contains("value"));
}

TEST_CASE("bootstrap within and thresholds") {
    const auto study = simulate_study_file("boot.json", 8, 2, 8, 7, 0.05);
    const auto curve = (workdir() / "boot_curve.csv").string();
    const auto r = run_cli({"bootstrap", study, "--metric", "mantel_r", "--n-values", "2:7",
                            "--seed", "5", "--thresholds", "0.9", "--out", curve});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(curve));
    const json report = json::parse(r.out);
    CHECK(report["results"]["mode"] == "within");
    CHECK(report["results"]["curves"][0]["points"].size() == 6);
}

TEST_CASE("bootstrap between accepts a study or matrix reference") {
    const auto full = simulate_study_file("ref_full.json", 8, 2, 8, 7, 0.0);
    const auto subset = simulate_study_file("ref_subset.json", 8, 2, 5, 7, 0.0);
    const auto sim_path = (workdir() / "ref_sim.csv").string();
    REQUIRE(run_cli({"simmatrix", full, "--out", sim_path}).code == 0);

    const auto via_study =
        run_cli({"bootstrap", subset, "--reference", full, "--metric", "mantel_r", "--n-values",
                 "3,5", "--seed", "2", "--out", (workdir() / "c1.csv").string()});
    REQUIRE(via_study.code == 0);
    CHECK(json::parse(via_study.out)["results"]["mode"] == "between");

    const auto via_matrix =
        run_cli({"bootstrap", subset, "--reference", sim_path, "--metric", "mantel_r",
                 "--n-values", "3,5", "--seed", "2", "--out", (workdir() / "c2.csv").string()});
    REQUIRE(via_matrix.code == 0);
    // same reference either way, identical curves
    CHECK(json::parse(via_matrix.out)["results"]["curves"] ==
          json::parse(via_study.out)["results"]["curves"]);
}

TEST_CASE("fit consumes a bootstrap curve") {
    // synthesize an exact weibull curve csv
    std::string csv_text = "metric,n,mean,sd,iterations_used\n";
    for (int n = 11; n <= 40; ++n) {
        const double y = 0.95 * (1.0 - std::exp(-std::pow(n / 20.0, 1.5)));
        csv_text += "mantel_r," + std::to_string(n) + "," + cardsort::csv::format_double(y) +
                    ",0,1\n";
    }
    const auto curve = (workdir() / "fit_curve.csv").string();
    cardsort::csv::write_file(curve, csv_text);
    const auto r = run_cli({"fit", "--curve", curve, "--target", "0.9", "--families",
                            "weibull_cdf,exponential"});
    REQUIRE(r.code == 0);
    const json report = json::parse(r.out);
    CHECK(report["results"]["fits"][0]["family"] == "weibull_cdf");
    CHECK(report["results"]["fits"][0]["r_squared"].get<double>() >= 0.9999);
    CHECK(report["results"]["fits"][0]["required_n"][0]["n"].get<int>() > 0);
}

TEST_CASE("cohort reports split, baseline and displacement") {
    const auto base = simulate_study_file("cohort.json", 8, 2, 8, 9, 0.2);
    // add a covariate by rewriting the study json
    auto study = cardsort::ingest_study(base);
    for (std::size_t i = 0; i < study.records.size(); ++i)
        study.records[i].covariates["trait"] = static_cast<double>(i % 5);
    const auto scored = (workdir() / "cohort_scored.json").string();
    cardsort::emit_study(study, scored);

    const auto r = run_cli({"cohort", scored, "--covariate", "trait", "--permutations", "10",
                            "--mantel-permutations", "49", "--seed", "3"});
    REQUIRE(r.code == 0);
    const json report = json::parse(r.out);
    CHECK(report["results"]["low_size"] == 3);
    CHECK(report["results"]["high_size"] == 3);
    CHECK(report["results"]["baseline"]["values"].size() == 10);
    CHECK(report["results"].contains("displacement_z"));

    const auto missing = run_cli({"cohort", scored, "--covariate", "nope", "--seed", "1"});
    CHECK(missing.code == 1);
}

TEST_CASE("labels reports tokens, jaccard, word tests and informativeness") {
    const auto a = simulate_study_file("lab_a.json", 8, 2, 8, 5, 0.0);
    const auto b = simulate_study_file("lab_b.json", 8, 2, 8, 5, 0.0);
    const auto tokens_csv = (workdir() / "tokens.csv").string();
    const auto r = run_cli({"labels", a, b, "--freq",
                            std::string(CARDSORT_DATA_DIR) + "/wordfreq_en.tsv", "--word",
                            "theme", "--tokens-out", tokens_csv});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(tokens_csv));
    const json report = json::parse(r.out);
    CHECK(report["results"]["vocab_jaccard"] == 1.0); // same generator labels
    CHECK(report["results"]["word_tests"][0]["word"] == "theme");
    CHECK(report["results"]["informativeness"].size() == 2);

    const auto single = run_cli({"labels", a});
    REQUIRE(single.code == 0);
    const json single_report = json::parse(single.out);
    CHECK(single_report["results"]["conditions"].size() == 1);
}

TEST_CASE("themes applies a standardization map") {
    const auto study = simulate_study_file("themes.json", 8, 2, 8, 5, 0.0);
    const auto data = cardsort::ingest_study(study);
    std::string map_csv = "participant_id,raw_label,theme\n";
    for (const auto& rec : data.records)
        for (const auto& cat : rec.categories)
            map_csv += rec.participant_id + "," + cat.label + "," +
                       (cat.label.find("theme-0") != std::string::npos ? "Zero" : "One") + "\n";
    const auto map_path = (workdir() / "map.csv").string();
    cardsort::csv::write_file(map_path, map_csv);

    const auto out_csv = (workdir() / "themes_out.csv").string();
    const auto r = run_cli({"themes", study, "--map", map_path, "--csv-out", out_csv,
                            "--threshold", "1"});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(out_csv));
    const json report = json::parse(r.out);
    CHECK(report["results"]["standardization_count"] == 2);
    CHECK(report["results"]["unstandardized_count"] == 0);
    CHECK(report["results"]["themes"][0]["agreement"].get<double>() == 100.0);
}

TEST_CASE("simulate emits study plus ground-truth sidecar") {
    const auto path = (workdir() / "sim_out.json").string();
    const auto r = run_cli({"simulate", "--cards", "6", "--themes", "2", "--n", "3", "--seed",
                            "11", "--out", path});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(path));
    CHECK(fs::exists(path + ".truth.json"));
    const json truth = json::parse(std::ifstream(path + ".truth.json"));
    CHECK(truth["assignment"].size() == 6);
    const auto data = cardsort::ingest_study(path);
    CHECK(data.card_count() == 6);
    CHECK(data.is_full_set());
}

TEST_CASE("stochastic subcommands are byte-deterministic given a seed") {
    const auto study = simulate_study_file("det.json", 8, 2, 6, 6, 0.15);
    const std::vector<std::vector<std::string>> invocations = {
        {"cluster", study, "--seed", "9", "--k-max", "4"},
        {"compare", study, study, "--permutations", "49", "--seed", "9", "--k-max", "3",
         "--restarts", "2"},
        {"bootstrap", study, "--metric", "mantel_r", "--n-values", "2:5", "--seed", "9", "--out",
         (workdir() / "det_curve.csv").string()},
    };
    for (const auto& args : invocations) {
        const auto first = run_cli(args);
        const auto second = run_cli(args);
        REQUIRE(first.code == 0);
        CHECK(first.out == second.out);
    }
}
