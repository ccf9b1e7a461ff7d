#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cardsort/cluster.hpp"
#include "cardsort/cohort.hpp"
#include "cardsort/csv.hpp"
#include "cardsort/error.hpp"
#include "cardsort/heatmap.hpp"
#include "cardsort/io.hpp"
#include "cardsort/labels.hpp"
#include "cardsort/report.hpp"
#include "cardsort/resample.hpp"
#include "cardsort/similarity.hpp"
#include "cardsort/simulate.hpp"
#include "cardsort/sizing.hpp"
#include "cardsort/stats.hpp"
#include "cardsort/themes.hpp"
#include "cardsort/version.hpp"

namespace cardsort::cli {

namespace detail {

using nlohmann::ordered_json;

inline void emit_report(const ordered_json& report, const std::string& out_path,
                        std::ostream& out) {
    const std::string text = report.dump(2) + "\n";
    if (out_path.empty())
        out << text;
    else
        csv::write_file(out_path, text);
}

// "2,5,8", "2:40" and "2:40:5" forms.
inline std::vector<int> parse_n_values(const std::string& spec) {
    std::vector<int> values;
    if (spec.empty()) return values;
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> bits;
        std::string current;
        for (char c : spec) {
            if (c == ':') {
                bits.push_back(current);
                current.clear();
            } else {
                current.push_back(c);
            }
        }
        bits.push_back(current);
        if (bits.size() < 2 || bits.size() > 3)
            fail(ErrorCode::invalid_argument, "n-values range must be lo:hi or lo:hi:step");
        const int lo = static_cast<int>(csv::parse_long(bits[0], "n-values"));
        const int hi = static_cast<int>(csv::parse_long(bits[1], "n-values"));
        const int step =
            bits.size() == 3 ? static_cast<int>(csv::parse_long(bits[2], "n-values")) : 1;
        if (step < 1) fail(ErrorCode::invalid_argument, "n-values step must be >= 1");
        for (int n = lo; n <= hi; n += step) values.push_back(n);
        return values;
    }
    for (const auto& field : csv::split_row(spec))
        values.push_back(static_cast<int>(csv::parse_long(csv::trim(field), "n-values")));
    return values;
}

inline SimilarityMatrix reference_matrix(const std::string& path) {
    if (guess_format(path) == StudyFormat::csv) {
        const auto rows = csv::read_rows(path);
        if (!rows.empty() && !rows[0].empty() && rows[0][0] == "card_id")
            return similarity_from_csv(path);
    }
    return compute_similarity(ingest_study(path)).first;
}

inline ordered_json curve_to_json(const BootstrapCurve& curve) {
    ordered_json j;
    j["metric"] = to_string(curve.metric);
    j["mode"] = to_string(curve.mode);
    j["points"] = ordered_json::array();
    for (const auto& point : curve.points)
        j["points"].push_back({{"n", point.n},
                               {"mean", point.mean},
                               {"sd", point.sd},
                               {"iterations_used", point.iterations_used}});
    return j;
}

inline Lemmatizer make_lemmatizer(const std::string& exceptions_path) {
    Lemmatizer lemmatizer;
    if (!exceptions_path.empty()) lemmatizer.load_exceptions(exceptions_path);
    return lemmatizer;
}

struct ClusterSeeds {
    std::uint64_t a;
    std::uint64_t b;
};

inline ClusterSeeds derive_cluster_seeds(std::uint64_t seed) {
    return {Rng::mix64(seed, 1), Rng::mix64(seed, 2)};
}

} // namespace detail

// Dispatches one invocation. Exit codes: 0 success, 1 data/analysis error,
// 2 usage error. Reports go to `out` as JSON unless the subcommand's --out
// redirects them; diagnostics go to `err`.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    using detail::ordered_json;

    CLI::App app{"Analysis engine for open card sorting studies with randomized card subsets"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    int exit_code = 0;

    // ---- simmatrix ---------------------------------------------------------
    struct {
        std::string study;
        std::string out_path;
        std::string exposure_path;
        std::string heatmap_path;
    } simmatrix_opts;
    auto* simmatrix = app.add_subcommand(
        "simmatrix", "Compute the exposure-normalized similarity and exposure matrices");
    simmatrix->add_option("study", simmatrix_opts.study, "Study file (JSON or CSV)")->required();
    simmatrix->add_option("--out", simmatrix_opts.out_path, "Similarity CSV path")->required();
    simmatrix->add_option("--exposure-out", simmatrix_opts.exposure_path,
                          "Exposure CSV path (default: <out>_exposure.csv)");
    simmatrix->add_option("--heatmap", simmatrix_opts.heatmap_path, "Write an SVG grid heatmap");
    simmatrix->callback([&]() {
        const StudyData data = ingest_study(simmatrix_opts.study);
        const auto [sim, exposure] = compute_similarity(data);
        csv::write_file(simmatrix_opts.out_path, similarity_to_csv(sim));
        std::string exposure_path = simmatrix_opts.exposure_path;
        if (exposure_path.empty()) {
            std::filesystem::path p(simmatrix_opts.out_path);
            const std::string stem = p.stem().string() + "_exposure.csv";
            exposure_path = (p.parent_path() / stem).string();
        }
        csv::write_file(exposure_path, exposure_to_csv(exposure));
        if (!simmatrix_opts.heatmap_path.empty())
            csv::write_file(simmatrix_opts.heatmap_path, similarity_to_svg(sim));

        std::size_t undefined = 0;
        for (std::size_t i = 0; i < sim.size(); ++i)
            for (std::size_t j = i + 1; j < sim.size(); ++j)
                if (!sim.defined(i, j)) ++undefined;

        ordered_json report = make_report("simmatrix");
        report["inputs"] = {{simmatrix_opts.study, file_digest(simmatrix_opts.study)}};
        report["results"] = {{"condition", data.condition_name},
                             {"cards", data.card_count()},
                             {"records", data.record_count()},
                             {"undefined_pairs", undefined},
                             {"similarity_csv", simmatrix_opts.out_path},
                             {"exposure_csv", exposure_path}};
        detail::emit_report(report, "", out);
    });

    // ---- cluster -----------------------------------------------------------
    struct {
        std::string study;
        int k = 0;
        int k_min = 1;
        int k_max = 12;
        std::uint64_t seed = 0;
        int restarts = 10;
        double impute = 0.0;
        std::string out_path;
    } cluster_opts;
    auto* cluster_cmd =
        app.add_subcommand("cluster", "Partition cards by k-means with elbow selection");
    cluster_cmd->add_option("study", cluster_opts.study, "Study file")->required();
    cluster_cmd->add_option("--k", cluster_opts.k, "Fixed cluster count (skips the elbow)");
    cluster_cmd->add_option("--k-min", cluster_opts.k_min, "Elbow range lower bound")->capture_default_str();
    cluster_cmd->add_option("--k-max", cluster_opts.k_max, "Elbow range upper bound")->capture_default_str();
    cluster_cmd->add_option("--seed", cluster_opts.seed, "RNG seed")->capture_default_str();
    cluster_cmd->add_option("--restarts", cluster_opts.restarts, "k-means restarts")->capture_default_str();
    cluster_cmd->add_option("--impute", cluster_opts.impute,
                            "Similarity imputed for never-co-shown pairs")->capture_default_str();
    cluster_cmd->add_option("--out", cluster_opts.out_path, "Clustering CSV path");
    cluster_cmd->callback([&]() {
        const StudyData data = ingest_study(cluster_opts.study);
        const auto sim = compute_similarity(data).first;
        const auto features = to_dissimilarity(sim, cluster_opts.impute);
        const int k_hi = std::min(cluster_opts.k_max, static_cast<int>(data.card_count()));
        const int k = cluster_opts.k > 0
                          ? cluster_opts.k
                          : elbow_k(features, cluster_opts.k_min, k_hi, cluster_opts.seed,
                                    cluster_opts.restarts);
        const Clustering clustering =
            kmeans(features, k, cluster_opts.seed, cluster_opts.restarts);

        ordered_json report = make_report("cluster");
        report["seed"] = cluster_opts.seed;
        report["inputs"] = {{cluster_opts.study, file_digest(cluster_opts.study)}};
        ordered_json results;
        results["condition"] = data.condition_name;
        results["k"] = clustering.k;
        results["k_selection"] = cluster_opts.k > 0 ? "fixed" : "elbow";
        results["inertia"] = clustering.inertia;
        std::vector<int> sizes(static_cast<std::size_t>(clustering.k), 0);
        for (int c : clustering.assignment) ++sizes[static_cast<std::size_t>(c)];
        results["cluster_sizes"] = sizes;
        if (cluster_opts.out_path.empty()) {
            ordered_json assignment;
            for (std::size_t i = 0; i < clustering.card_ids.size(); ++i)
                assignment[clustering.card_ids[i]] = clustering.assignment[i];
            results["assignment"] = assignment;
        } else {
            csv::write_file(cluster_opts.out_path, clustering_to_csv(clustering));
            results["clustering_csv"] = cluster_opts.out_path;
        }
        report["results"] = results;
        detail::emit_report(report, "", out);
    });

    // ---- compare -----------------------------------------------------------
    struct {
        std::string study_a;
        std::string study_b;
        int permutations = 9999;
        std::uint64_t seed = 0;
        double impute = 0.0;
        int k_min = 1;
        int k_max = 12;
        int restarts = 10;
        int threads = 1;
        std::string out_path;
    } compare_opts;
    auto* compare_cmd = app.add_subcommand(
        "compare", "Mantel test and AMI between two conditions over the same card set");
    compare_cmd->add_option("study_a", compare_opts.study_a, "First study file")->required();
    compare_cmd->add_option("study_b", compare_opts.study_b, "Second study file")->required();
    compare_cmd->add_option("--permutations", compare_opts.permutations,
                            "Mantel permutation count")->capture_default_str();
    compare_cmd->add_option("--seed", compare_opts.seed, "RNG seed")->capture_default_str();
    compare_cmd->add_option("--impute", compare_opts.impute,
                            "Similarity imputed before clustering")->capture_default_str();
    compare_cmd->add_option("--k-min", compare_opts.k_min, "Elbow range lower bound")->capture_default_str();
    compare_cmd->add_option("--k-max", compare_opts.k_max, "Elbow range upper bound")->capture_default_str();
    compare_cmd->add_option("--restarts", compare_opts.restarts, "k-means restarts")->capture_default_str();
    compare_cmd->add_option("--threads", compare_opts.threads, "Parallelism cap")->capture_default_str();
    compare_cmd->add_option("--out", compare_opts.out_path, "Report path (default stdout)");
    compare_cmd->callback([&]() {
        const StudyData a = ingest_study(compare_opts.study_a);
        const StudyData b = ingest_study(compare_opts.study_b);
        const auto sim_a = compute_similarity(a).first;
        const auto sim_b = compute_similarity(b).first;
        const TestResult mantel_result =
            mantel(sim_a, sim_b, compare_opts.permutations, compare_opts.seed,
                   compare_opts.threads);

        const auto features_a = to_dissimilarity(sim_a, compare_opts.impute);
        const auto features_b = to_dissimilarity(sim_b, compare_opts.impute);
        const int k_hi = std::min(compare_opts.k_max, static_cast<int>(a.card_count()));
        const auto seeds = detail::derive_cluster_seeds(compare_opts.seed);
        const int ka =
            elbow_k(features_a, compare_opts.k_min, k_hi, seeds.a, compare_opts.restarts);
        const int kb =
            elbow_k(features_b, compare_opts.k_min, k_hi, seeds.b, compare_opts.restarts);
        const Clustering ca = kmeans(features_a, ka, seeds.a, compare_opts.restarts);
        const Clustering cb = kmeans(features_b, kb, seeds.b, compare_opts.restarts);

        ordered_json report = make_report("compare");
        report["seed"] = compare_opts.seed;
        report["inputs"] = {{compare_opts.study_a, file_digest(compare_opts.study_a)},
                            {compare_opts.study_b, file_digest(compare_opts.study_b)}};
        report["results"] = {
            {"mantel", test_result_to_json(mantel_result)},
            {"mantel_permutations", compare_opts.permutations},
            {"ami", {{"value", ami(ca, cb)}, {"k_a", ka}, {"k_b", kb}}},
        };
        detail::emit_report(report, compare_opts.out_path, out);
    });

    // ---- bootstrap ---------------------------------------------------------
    struct {
        std::string study;
        std::string reference;
        std::string metric = "both";
        std::string n_values;
        int max_iterations = 20;
        double stop_delta = 0.001;
        std::uint64_t seed = 0;
        double impute = 0.0;
        int k_min = 1;
        int k_max = 12;
        int restarts = 10;
        int threads = 1;
        std::string thresholds;
        std::string out_path;
    } boot_opts;
    auto* boot_cmd = app.add_subcommand(
        "bootstrap", "Trace statistic-vs-sample-size curves by resampling participants");
    boot_cmd->add_option("study", boot_opts.study, "Study file to resample")->required();
    boot_cmd->add_option("--reference", boot_opts.reference,
                         "Between-condition reference (study file or similarity CSV); "
                         "omit for within-condition bootstrapping");
    boot_cmd->add_option("--metric", boot_opts.metric, "mantel_r, ami or both")->capture_default_str()
        ->check(CLI::IsMember({"mantel_r", "ami", "both"}));
    boot_cmd->add_option("--n-values", boot_opts.n_values,
                         "Sample sizes: list 2,5,8 or range lo:hi[:step] (default 2:N)");
    boot_cmd->add_option("--max-iter", boot_opts.max_iterations, "Iterations per sample size")->capture_default_str();
    boot_cmd->add_option("--stop-delta", boot_opts.stop_delta,
                         "Stop early when the running mean moves less than this")->capture_default_str();
    boot_cmd->add_option("--seed", boot_opts.seed, "RNG seed")->capture_default_str();
    boot_cmd->add_option("--impute", boot_opts.impute, "Similarity imputed before clustering")->capture_default_str();
    boot_cmd->add_option("--k-min", boot_opts.k_min, "Elbow range lower bound")->capture_default_str();
    boot_cmd->add_option("--k-max", boot_opts.k_max, "Elbow range upper bound")->capture_default_str();
    boot_cmd->add_option("--restarts", boot_opts.restarts, "k-means restarts")->capture_default_str();
    boot_cmd->add_option("--threads", boot_opts.threads, "Parallelism cap")->capture_default_str();
    boot_cmd->add_option("--thresholds", boot_opts.thresholds,
                         "Comma-separated targets reported as smallest n with mean >= target");
    boot_cmd->add_option("--out", boot_opts.out_path, "Curve CSV path")->required();
    boot_cmd->callback([&]() {
        const StudyData data = ingest_study(boot_opts.study);
        BootstrapOptions options;
        options.n_values = detail::parse_n_values(boot_opts.n_values);
        options.max_iterations = boot_opts.max_iterations;
        options.stop_delta = boot_opts.stop_delta;
        options.seed = boot_opts.seed;
        options.impute = boot_opts.impute;
        options.k_min = boot_opts.k_min;
        options.k_max = boot_opts.k_max;
        options.restarts = boot_opts.restarts;
        options.threads = boot_opts.threads;
        if (boot_opts.metric == "mantel_r")
            options.metrics = {BootstrapMetric::mantel_r};
        else if (boot_opts.metric == "ami")
            options.metrics = {BootstrapMetric::ami};

        std::vector<BootstrapCurve> curves;
        ordered_json inputs = {{boot_opts.study, file_digest(boot_opts.study)}};
        if (boot_opts.reference.empty()) {
            curves = bootstrap_within(data, options);
        } else {
            const SimilarityMatrix reference = detail::reference_matrix(boot_opts.reference);
            inputs[boot_opts.reference] = file_digest(boot_opts.reference);
            curves = bootstrap_between(data, reference, options);
        }
        csv::write_file(boot_opts.out_path, curves_to_csv(curves));

        ordered_json report = make_report("bootstrap");
        report["seed"] = boot_opts.seed;
        report["inputs"] = inputs;
        ordered_json results;
        results["mode"] = to_string(curves.front().mode);
        results["curve_csv"] = boot_opts.out_path;
        results["curves"] = ordered_json::array();
        for (const auto& curve : curves) results["curves"].push_back(detail::curve_to_json(curve));
        if (!boot_opts.thresholds.empty()) {
            ordered_json thresholds = ordered_json::array();
            for (const auto& field : csv::split_row(boot_opts.thresholds)) {
                const double target = csv::parse_double(csv::trim(field), "thresholds");
                for (const auto& curve : curves) {
                    const auto n = threshold_n(curve, target);
                    ordered_json entry;
                    entry["metric"] = to_string(curve.metric);
                    entry["target"] = target;
                    if (n)
                        entry["n"] = *n;
                    else
                        entry["n"] = nullptr;
                    thresholds.push_back(entry);
                }
            }
            results["thresholds"] = thresholds;
        }
        report["results"] = results;
        detail::emit_report(report, "", out);
    });

    // ---- fit ---------------------------------------------------------------
    struct {
        std::string curve_path;
        std::string metric = "mantel_r";
        int min_n = 10;
        std::string families;
        std::vector<double> targets;
        int threads = 1;
        std::string out_path;
    } fit_opts;
    auto* fit_cmd =
        app.add_subcommand("fit", "Fit growth-curve families to a bootstrap curve CSV");
    fit_cmd->add_option("--curve", fit_opts.curve_path, "Bootstrap curve CSV")->required();
    fit_cmd->add_option("--metric", fit_opts.metric, "Curve metric to fit")->capture_default_str()
        ->check(CLI::IsMember({"mantel_r", "ami"}));
    fit_cmd->add_option("--min-n", fit_opts.min_n, "Fit only points with n strictly above this")->capture_default_str();
    fit_cmd->add_option("--families", fit_opts.families,
                        "Comma-separated family subset (default: all ten)");
    fit_cmd->add_option("--target", fit_opts.targets,
                        "Report the smallest n whose fitted value reaches this target");
    fit_cmd->add_option("--threads", fit_opts.threads, "Parallelism cap")->capture_default_str();
    fit_cmd->add_option("--out", fit_opts.out_path, "Report path (default stdout)");
    fit_cmd->callback([&]() {
        const auto curves = curves_from_csv(fit_opts.curve_path);
        const BootstrapMetric metric = fit_opts.metric == "ami" ? BootstrapMetric::ami
                                                                : BootstrapMetric::mantel_r;
        const auto it = std::find_if(curves.begin(), curves.end(),
                                     [&](const BootstrapCurve& c) { return c.metric == metric; });
        if (it == curves.end())
            fail(ErrorCode::invalid_argument,
                 "curve file has no '" + fit_opts.metric + "' rows");
        std::vector<FitPoint> points;
        for (const auto& point : it->points)
            points.push_back({static_cast<double>(point.n), point.mean});

        std::vector<FitFamily> families = all_fit_families();
        if (!fit_opts.families.empty()) {
            families.clear();
            for (const auto& field : csv::split_row(fit_opts.families)) {
                const std::string name = csv::trim(field);
                bool found = false;
                for (const auto family : all_fit_families())
                    if (name == to_string(family)) {
                        families.push_back(family);
                        found = true;
                    }
                if (!found)
                    fail(ErrorCode::invalid_argument, "unknown family '" + name + "'");
            }
        }

        const FitOutput fitted = fit_growth(points, families, fit_opts.min_n, fit_opts.threads);
        for (const auto& warning : fitted.warnings) err << "warning: " << warning << "\n";

        ordered_json report = make_report("fit");
        report["inputs"] = {{fit_opts.curve_path, file_digest(fit_opts.curve_path)}};
        ordered_json results;
        results["metric"] = fit_opts.metric;
        results["min_n"] = fit_opts.min_n;
        results["fits"] = ordered_json::array();
        for (const auto& fit : fitted.fits) {
            ordered_json fj;
            fj["family"] = to_string(fit.family);
            ordered_json params;
            const auto names = param_names(fit.family);
            for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = fit.params[i];
            fj["params"] = params;
            fj["r_squared"] = fit.r_squared;
            fj["n_points"] = fit.n_points;
            if (!fit_opts.targets.empty()) {
                ordered_json required = ordered_json::array();
                for (double target : fit_opts.targets) {
                    const auto n = required_n(fit, target);
                    ordered_json entry;
                    entry["target"] = target;
                    if (n)
                        entry["n"] = *n;
                    else
                        entry["n"] = nullptr;
                    required.push_back(entry);
                }
                fj["required_n"] = required;
            }
            results["fits"].push_back(fj);
        }
        report["results"] = results;
        detail::emit_report(report, fit_opts.out_path, out);
    });

    // ---- samplesize --------------------------------------------------------
    struct {
        int full = 0;
        int subset = 0;
        bool json = false;
    } size_opts;
    auto* size_cmd = app.add_subcommand(
        "samplesize", "Closed-form participant count for a randomized-subset study");
    size_cmd->add_option("--full", size_opts.full, "Full card set size")->required();
    size_cmd->add_option("--subset", size_opts.subset, "Randomized subset size")->required();
    size_cmd->add_flag("--json", size_opts.json, "Emit a JSON report instead of the bare number");
    size_cmd->callback([&]() {
        const int n = formula_sample_size(size_opts.full, size_opts.subset);
        if (!size_opts.json) {
            out << n << "\n";
            return;
        }
        ordered_json report = make_report("samplesize");
        report["results"] = {{"full_count", size_opts.full},
                             {"subset_count", size_opts.subset},
                             {"sample_size", n},
                             {"sample_size_exact",
                              formula_sample_size_exact(size_opts.full, size_opts.subset)}};
        detail::emit_report(report, "", out);
    });

    // ---- cohort ------------------------------------------------------------
    struct {
        std::string study;
        std::string covariate;
        int permutations = 20;
        int mantel_permutations = 999;
        std::uint64_t seed = 0;
        int threads = 1;
        std::string out_path;
    } cohort_opts;
    auto* cohort_cmd = app.add_subcommand(
        "cohort", "Tercile subgroup correlation against a permutation baseline");
    cohort_cmd->add_option("study", cohort_opts.study, "Study file")->required();
    cohort_cmd->add_option("--covariate", cohort_opts.covariate, "Covariate to split on")
        ->required();
    cohort_cmd->add_option("--permutations", cohort_opts.permutations,
                           "Baseline permutation count")->capture_default_str();
    cohort_cmd->add_option("--mantel-permutations", cohort_opts.mantel_permutations,
                           "Permutations for the subgroup Mantel p-value")->capture_default_str();
    cohort_cmd->add_option("--seed", cohort_opts.seed, "RNG seed")->capture_default_str();
    cohort_cmd->add_option("--threads", cohort_opts.threads, "Parallelism cap")->capture_default_str();
    cohort_cmd->add_option("--out", cohort_opts.out_path, "Report path (default stdout)");
    cohort_cmd->callback([&]() {
        const StudyData data = ingest_study(cohort_opts.study);
        const CohortSplit split = split_terciles(data, cohort_opts.covariate);
        if (split.degenerate)
            err << "warning: tercile boundaries degenerate for covariate '"
                << cohort_opts.covariate << "' (ties span the cut)\n";
        const TestResult subgroup =
            subgroup_correlation(split, cohort_opts.mantel_permutations,
                                 Rng::mix64(cohort_opts.seed, 11), cohort_opts.threads);
        const int subgroup_size = static_cast<int>(split.low.record_count());
        const PermutationBaseline baseline =
            permutation_baseline(data, subgroup_size, cohort_opts.permutations,
                                 Rng::mix64(cohort_opts.seed, 12), cohort_opts.threads);
        const double displacement =
            baseline.sd > 0 ? (subgroup.statistic - baseline.mean) / baseline.sd : 0.0;

        ordered_json report = make_report("cohort");
        report["seed"] = cohort_opts.seed;
        report["inputs"] = {{cohort_opts.study, file_digest(cohort_opts.study)}};
        report["results"] = {
            {"covariate", cohort_opts.covariate},
            {"low_size", split.low.record_count()},
            {"high_size", split.high.record_count()},
            {"cut_low", split.cut_low},
            {"cut_high", split.cut_high},
            {"degenerate", split.degenerate},
            {"subgroup_mantel", test_result_to_json(subgroup)},
            {"baseline",
             {{"permutations", baseline.n_permutations},
              {"mean", baseline.mean},
              {"sd", baseline.sd},
              {"values", baseline.values}}},
            {"displacement_z", displacement},
        };
        detail::emit_report(report, cohort_opts.out_path, out);
    });

    // ---- labels ------------------------------------------------------------
    struct {
        std::vector<std::string> studies;
        std::string freq_path;
        double default_zipf = 1.0;
        std::string exceptions_path;
        std::vector<std::string> words;
        std::string tokens_out;
        std::string out_path;
    } labels_opts;
    auto* labels_cmd = app.add_subcommand(
        "labels", "Linguistic analysis of category labels (tokens, overlap, informativeness)");
    labels_cmd->add_option("studies", labels_opts.studies, "One or two study files")
        ->expected(1, 2)
        ->required();
    labels_cmd->add_option("--freq", labels_opts.freq_path,
                           "Zipf frequency table TSV (default: $CARDSORT_FREQ_TABLE)");
    labels_cmd->add_option("--default-zipf", labels_opts.default_zipf,
                           "Zipf for out-of-vocabulary words")->capture_default_str();
    labels_cmd->add_option("--lemma-exceptions", labels_opts.exceptions_path,
                           "Extra irregular-form TSV for the lemmatizer");
    labels_cmd->add_option("--word", labels_opts.words,
                           "Word to compare between two conditions (repeatable)");
    labels_cmd->add_option("--tokens-out", labels_opts.tokens_out,
                           "Token count CSV for the first study");
    labels_cmd->add_option("--out", labels_opts.out_path, "Report path (default stdout)");
    labels_cmd->callback([&]() {
        const Lemmatizer lemmatizer = detail::make_lemmatizer(labels_opts.exceptions_path);
        std::vector<StudyData> studies;
        ordered_json inputs;
        for (const auto& path : labels_opts.studies) {
            studies.push_back(ingest_study(path));
            inputs[path] = file_digest(path);
        }
        std::vector<TokenCounts> counts;
        for (const auto& study : studies) counts.push_back(tokenize_labels(study, lemmatizer));

        if (!labels_opts.tokens_out.empty())
            csv::write_file(labels_opts.tokens_out, token_counts_to_csv(counts.front()));

        ordered_json report = make_report("labels");
        report["inputs"] = inputs;
        ordered_json results;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            results["conditions"].push_back(
                {{"condition", counts[i].condition_name},
                 {"total_tokens", counts[i].total_tokens},
                 {"distinct_words", counts[i].counts.size()}});
        }
        if (counts.size() == 2) {
            results["vocab_jaccard"] = vocab_jaccard(counts[0], counts[1]);
            if (!labels_opts.words.empty()) {
                results["word_tests"] = ordered_json::array();
                for (const auto& word : labels_opts.words) {
                    ordered_json entry;
                    entry["word"] = word;
                    const auto at = counts[0].counts.find(word);
                    const auto bt = counts[1].counts.find(word);
                    entry["count_a"] = at == counts[0].counts.end() ? 0 : at->second;
                    entry["count_b"] = bt == counts[1].counts.end() ? 0 : bt->second;
                    entry["chi_squared"] =
                        test_result_to_json(compare_word(word, counts[0], counts[1]));
                    results["word_tests"].push_back(entry);
                }
            }
        } else if (!labels_opts.words.empty()) {
            fail(ErrorCode::invalid_argument, "--word requires two studies");
        }

        std::string freq_path = labels_opts.freq_path;
        if (freq_path.empty())
            if (const char* env = std::getenv("CARDSORT_FREQ_TABLE")) freq_path = env;
        if (!freq_path.empty()) {
            const FrequencyTable table =
                load_frequency_table(freq_path, labels_opts.default_zipf);
            results["frequency_table"] = freq_path;
            results["informativeness"] = ordered_json::array();
            for (std::size_t i = 0; i < studies.size(); ++i) {
                double sum = 0, ss = 0;
                std::size_t n = 0;
                ordered_json per_participant;
                for (const auto& rec : studies[i].records) {
                    const double score = informativeness(rec, table, lemmatizer);
                    per_participant[rec.participant_id] = score;
                    sum += score;
                    ++n;
                }
                const double mean = sum / static_cast<double>(n);
                for (const auto& rec : studies[i].records) {
                    const double score = informativeness(rec, table, lemmatizer);
                    ss += (score - mean) * (score - mean);
                }
                results["informativeness"].push_back(
                    {{"condition", studies[i].condition_name},
                     {"mean", mean},
                     {"sd", std::sqrt(ss / static_cast<double>(n))},
                     {"per_participant", per_participant}});
            }
        }
        report["results"] = results;
        detail::emit_report(report, labels_opts.out_path, out);
    });

    // ---- themes ------------------------------------------------------------
    struct {
        std::string study;
        std::string map_path;
        std::string policy = "unstandardized";
        int threshold = 0;
        std::string csv_out;
        std::string out_path;
    } themes_opts;
    auto* themes_cmd = app.add_subcommand(
        "themes", "Apply a thematic standardization map and score agreement");
    themes_cmd->add_option("study", themes_opts.study, "Study file")->required();
    themes_cmd->add_option("--map", themes_opts.map_path,
                           "Standardization CSV (participant_id, raw_label, theme)")
        ->required();
    themes_cmd->add_option("--policy", themes_opts.policy,
                           "Unmapped category policy: unstandardized or error")->capture_default_str()
        ->check(CLI::IsMember({"unstandardized", "error"}));
    themes_cmd->add_option("--threshold", themes_opts.threshold,
                           "Minimum contributing participants for the frequency list")->capture_default_str();
    themes_cmd->add_option("--csv-out", themes_opts.csv_out, "Theme summary CSV path");
    themes_cmd->add_option("--out", themes_opts.out_path, "Report path (default stdout)");
    themes_cmd->callback([&]() {
        const StudyData data = ingest_study(themes_opts.study);
        const StandardizationMap map = standardization_from_csv(
            themes_opts.map_path, themes_opts.policy == "error" ? UnmappedPolicy::error
                                                                : UnmappedPolicy::unstandardized);
        const StandardizationResult result = apply_standardization(data, map);
        if (!themes_opts.csv_out.empty())
            csv::write_file(themes_opts.csv_out, themes_to_csv(result));

        double mean_agreement = 0;
        for (const auto& theme : result.themes) mean_agreement += theme.agreement;
        if (!result.themes.empty()) mean_agreement /= static_cast<double>(result.themes.size());

        ordered_json report = make_report("themes");
        report["inputs"] = {{themes_opts.study, file_digest(themes_opts.study)},
                            {themes_opts.map_path, file_digest(themes_opts.map_path)}};
        ordered_json results;
        results["condition"] = data.condition_name;
        results["standardization_count"] = result.themes.size();
        results["unstandardized_count"] = result.unstandardized_count;
        results["mean_agreement"] = mean_agreement;
        results["themes"] = ordered_json::array();
        for (const auto& theme : result.themes)
            results["themes"].push_back({{"theme", theme.theme},
                                         {"m", theme.m},
                                         {"r", theme.r},
                                         {"agreement", theme.agreement}});
        results["frequency"] = ordered_json::array();
        for (const auto& [theme, count] : theme_frequency(result.themes, themes_opts.threshold))
            results["frequency"].push_back({{"theme", theme}, {"participants", count}});
        if (!themes_opts.csv_out.empty()) results["themes_csv"] = themes_opts.csv_out;
        report["results"] = results;
        detail::emit_report(report, themes_opts.out_path, out);
    });

    // ---- simulate ----------------------------------------------------------
    struct {
        int cards = 50;
        int themes = 6;
        int subset = 0;
        int participants = 40;
        double epsilon = 0.0;
        double split_prob = 0.0;
        std::uint64_t seed = 0;
        std::string out_path;
        std::string truth_path;
    } sim_opts;
    auto* sim_cmd = app.add_subcommand(
        "simulate", "Generate a synthetic study with a known ground-truth partition");
    sim_cmd->add_option("--cards", sim_opts.cards, "Card count")->capture_default_str();
    sim_cmd->add_option("--themes", sim_opts.themes, "Ground-truth theme count")->capture_default_str();
    sim_cmd->add_option("--subset", sim_opts.subset,
                        "Cards shown per participant (default: all)");
    sim_cmd->add_option("--n", sim_opts.participants, "Participant count")->capture_default_str();
    sim_cmd->add_option("--epsilon", sim_opts.epsilon, "Per-card misfile probability")->capture_default_str();
    sim_cmd->add_option("--split-prob", sim_opts.split_prob,
                        "Per-theme probability a participant splits it")->capture_default_str();
    sim_cmd->add_option("--seed", sim_opts.seed, "RNG seed")->capture_default_str();
    sim_cmd->add_option("--out", sim_opts.out_path, "Study JSON path")->required();
    sim_cmd->add_option("--truth-out", sim_opts.truth_path,
                        "Ground-truth sidecar path (default: <out>.truth.json)");
    sim_cmd->callback([&]() {
        SimConfig config;
        config.card_count = sim_opts.cards;
        config.theme_count = sim_opts.themes;
        config.subset_size = sim_opts.subset > 0 ? sim_opts.subset : sim_opts.cards;
        config.participants = sim_opts.participants;
        config.noise_epsilon = sim_opts.epsilon;
        config.split_prob = sim_opts.split_prob;
        config.seed = sim_opts.seed;
        const SimulatedStudy study = simulate_study(config);
        emit_study(study.data, sim_opts.out_path);

        std::string truth_path = sim_opts.truth_path;
        if (truth_path.empty()) truth_path = sim_opts.out_path + ".truth.json";
        ordered_json truth;
        truth["themes"] = config.theme_count;
        truth["assignment"] = ordered_json::object();
        for (const auto& [card, theme] : study.ground_truth) truth["assignment"][card] = theme;
        csv::write_file(truth_path, truth.dump(2) + "\n");

        ordered_json report = make_report("simulate");
        report["seed"] = sim_opts.seed;
        report["results"] = {{"condition", study.data.condition_name},
                             {"cards", config.card_count},
                             {"themes", config.theme_count},
                             {"subset_size", config.subset_size},
                             {"participants", config.participants},
                             {"noise_epsilon", config.noise_epsilon},
                             {"split_prob", config.split_prob},
                             {"study_json", sim_opts.out_path},
                             {"truth_json", truth_path},
                             {"study_digest", file_digest(sim_opts.out_path)}};
        detail::emit_report(report, "", out);
    });

    // ---- dispatch ----------------------------------------------------------
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        err << app.help();
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}

} // namespace cardsort::cli
