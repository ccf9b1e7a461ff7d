#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cardsort/cluster.hpp"
#include "cardsort/cohort.hpp"
#include "cardsort/csv.hpp"
#include "cardsort/error.hpp"
#include "cardsort/model.hpp"
#include "cardsort/parallel.hpp"
#include "cardsort/rng.hpp"
#include "cardsort/similarity.hpp"
#include "cardsort/stats.hpp"

namespace cardsort {

enum class BootstrapMetric { mantel_r, ami };
enum class BootstrapMode { within, between };

inline const char* to_string(BootstrapMetric metric) {
    return metric == BootstrapMetric::mantel_r ? "mantel_r" : "ami";
}
inline const char* to_string(BootstrapMode mode) {
    return mode == BootstrapMode::within ? "within" : "between";
}

struct BootstrapPoint {
    int n = 0;
    double mean = 0;
    double sd = 0; // population sd over the contributing iterations
    int iterations_used = 0;
};

struct BootstrapCurve {
    BootstrapMetric metric;
    BootstrapMode mode;
    std::vector<BootstrapPoint> points; // n strictly increasing
};

struct BootstrapOptions {
    std::vector<int> n_values;     // empty: every integer from 2 to N
    int max_iterations = 20;
    double stop_delta = 0.001;     // early stop once the running mean moves less
    std::uint64_t seed = 0;
    std::vector<BootstrapMetric> metrics = {BootstrapMetric::mantel_r, BootstrapMetric::ami};
    double impute = 0.0;           // similarity imputed for undefined entries before clustering
    int k_min = 1;
    int k_max = 12;                // clamped to the card count
    int restarts = 10;
    int threads = 1;
};

namespace detail {

// Degenerate comparisons (fewer than 3 defined pairs, or a constant matrix)
// carry no correlation evidence; inside the bootstrap they score 0 rather
// than aborting the curve. This only occurs at very small resample sizes.
inline double mantel_r_or_zero(const SimilarityMatrix& a, const SimilarityMatrix& b) {
    try {
        return mantel_r(a, b);
    } catch (const Error&) {
        return 0.0;
    }
}

struct BootstrapContext {
    const StudyData* data = nullptr;
    const SimilarityMatrix* reference = nullptr;
    std::optional<Clustering> reference_clustering;
    std::vector<std::size_t> canonical;
    BootstrapOptions options;
    int k_hi = 1;
};

inline double evaluate_metric(const BootstrapContext& ctx, BootstrapMetric metric,
                              const SimilarityMatrix& resample_sim, Rng cluster_rng) {
    if (metric == BootstrapMetric::mantel_r)
        return mantel_r_or_zero(resample_sim, *ctx.reference);
    const auto features = to_dissimilarity(resample_sim, ctx.options.impute);
    const std::uint64_t kseed = cluster_rng.next_u64();
    const int k = elbow_k(features, ctx.options.k_min, ctx.k_hi, kseed, ctx.options.restarts);
    const Clustering clustering = kmeans(features, k, kseed, ctx.options.restarts);
    return ami(clustering, *ctx.reference_clustering);
}

// Values for all (iteration, metric) pairs at one sample size. The draw for
// iteration i depends only on (seed, n, i), never on thread count or on which
// metrics are requested.
inline std::vector<std::vector<double>> iteration_values(const BootstrapContext& ctx, int n) {
    const Rng n_rng = Rng(ctx.options.seed).substream(static_cast<std::uint64_t>(n));
    const std::size_t iters = static_cast<std::size_t>(ctx.options.max_iterations);
    return parallel_map<std::vector<double>>(
        iters, ctx.options.threads, [&](std::size_t iter) {
            Rng rng = n_rng.substream(iter);
            std::vector<std::size_t> order = ctx.canonical;
            rng.shuffle(order);
            order.resize(static_cast<std::size_t>(n));
            const StudyData resample = select_records(*ctx.data, order);
            const auto sim = compute_similarity(resample).first;
            std::vector<double> values;
            values.reserve(ctx.options.metrics.size());
            for (const auto metric : ctx.options.metrics)
                values.push_back(evaluate_metric(ctx, metric, sim, rng.substream(1)));
            return values;
        });
}

// Applies the stopping criterion over the deterministic iteration order:
// stop once the running mean changes by less than stop_delta.
inline BootstrapPoint summarize(const std::vector<double>& values, int n, double stop_delta) {
    BootstrapPoint point;
    point.n = n;
    double sum = 0;
    double prev_mean = 0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum += values[i];
        const double mean = sum / static_cast<double>(i + 1);
        used = i + 1;
        if (i > 0 && std::abs(mean - prev_mean) < stop_delta) {
            break;
        }
        prev_mean = mean;
    }
    point.iterations_used = static_cast<int>(used);
    double mean = 0;
    for (std::size_t i = 0; i < used; ++i) mean += values[i];
    mean /= static_cast<double>(used);
    double ss = 0;
    for (std::size_t i = 0; i < used; ++i) ss += (values[i] - mean) * (values[i] - mean);
    point.mean = mean;
    point.sd = std::sqrt(ss / static_cast<double>(used));
    return point;
}

inline std::vector<BootstrapCurve> run_bootstrap(BootstrapContext& ctx, BootstrapMode mode) {
    const StudyData& data = *ctx.data;
    BootstrapOptions& options = ctx.options;
    const int n_records = static_cast<int>(data.records.size());
    if (options.max_iterations < 1)
        fail(ErrorCode::invalid_argument, "bootstrap: max_iterations must be >= 1");
    if (options.metrics.empty())
        fail(ErrorCode::invalid_argument, "bootstrap: no metrics requested");

    if (options.n_values.empty())
        for (int n = 2; n <= n_records; ++n) options.n_values.push_back(n);
    std::vector<int> ns = options.n_values;
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    for (int n : ns) {
        if (n < 1) fail(ErrorCode::invalid_argument, "bootstrap: n must be >= 1");
        if (n > n_records)
            fail(ErrorCode::n_too_large, "bootstrap: n = " + std::to_string(n) +
                                             " exceeds record count " + std::to_string(n_records));
    }

    ctx.k_hi = std::min(options.k_max, static_cast<int>(data.card_count()));
    if (ctx.k_hi < options.k_min)
        fail(ErrorCode::invalid_range, "bootstrap: elbow range empty after clamping");
    ctx.canonical = detail::canonical_order(data);

    const bool wants_ami = std::find(options.metrics.begin(), options.metrics.end(),
                                     BootstrapMetric::ami) != options.metrics.end();
    if (wants_ami) {
        const auto features = to_dissimilarity(*ctx.reference, options.impute);
        const std::uint64_t ref_seed = Rng(options.seed).substream(0).next_u64();
        const int k = elbow_k(features, options.k_min, ctx.k_hi, ref_seed, options.restarts);
        ctx.reference_clustering = kmeans(features, k, ref_seed, options.restarts);
    }

    std::vector<BootstrapCurve> curves(options.metrics.size());
    for (std::size_t mi = 0; mi < options.metrics.size(); ++mi) {
        curves[mi].metric = options.metrics[mi];
        curves[mi].mode = mode;
    }

    for (int n : ns) {
        // Sequential execution stops drawing at the stopping point; parallel
        // execution evaluates the full batch and applies the same criterion
        // to the prefix, so both yield identical points.
        if (options.threads <= 1) {
            const Rng n_rng = Rng(options.seed).substream(static_cast<std::uint64_t>(n));
            std::vector<std::vector<double>> per_metric(options.metrics.size());
            std::vector<bool> stopped(options.metrics.size(), false);
            for (int iter = 0; iter < options.max_iterations; ++iter) {
                if (std::all_of(stopped.begin(), stopped.end(), [](bool s) { return s; })) break;
                Rng rng = n_rng.substream(static_cast<std::uint64_t>(iter));
                std::vector<std::size_t> order = ctx.canonical;
                rng.shuffle(order);
                order.resize(static_cast<std::size_t>(n));
                const StudyData resample = select_records(data, order);
                const auto sim = compute_similarity(resample).first;
                Rng cluster_rng = rng.substream(1);
                for (std::size_t mi = 0; mi < options.metrics.size(); ++mi) {
                    if (stopped[mi]) continue;
                    auto& values = per_metric[mi];
                    const double value =
                        evaluate_metric(ctx, options.metrics[mi], sim, cluster_rng);
                    if (!values.empty()) {
                        const double prev_mean =
                            std::accumulate(values.begin(), values.end(), 0.0) /
                            static_cast<double>(values.size());
                        values.push_back(value);
                        const double mean =
                            std::accumulate(values.begin(), values.end(), 0.0) /
                            static_cast<double>(values.size());
                        if (std::abs(mean - prev_mean) < options.stop_delta) stopped[mi] = true;
                    } else {
                        values.push_back(value);
                    }
                }
            }
            for (std::size_t mi = 0; mi < options.metrics.size(); ++mi)
                curves[mi].points.push_back(summarize(per_metric[mi], n, options.stop_delta));
        } else {
            const auto batch = iteration_values(ctx, n);
            for (std::size_t mi = 0; mi < options.metrics.size(); ++mi) {
                std::vector<double> values;
                values.reserve(batch.size());
                for (const auto& row : batch) values.push_back(row[mi]);
                curves[mi].points.push_back(summarize(values, n, options.stop_delta));
            }
        }
    }
    return curves;
}

} // namespace detail

// Within-condition bootstrapping: resamples of n records (without
// replacement) are compared against the condition's own full-sample
// structures, tracing how the statistic depends on sample size.
inline std::vector<BootstrapCurve> bootstrap_within(const StudyData& data,
                                                    BootstrapOptions options) {
    detail::BootstrapContext ctx;
    const auto sim = compute_similarity(data).first;
    ctx.data = &data;
    ctx.reference = &sim;
    ctx.options = std::move(options);
    return detail::run_bootstrap(ctx, BootstrapMode::within);
}

// Between-condition bootstrapping: the comparison target is a fixed external
// reference matrix (e.g. the full-set condition, treated as ground truth).
inline std::vector<BootstrapCurve> bootstrap_between(const StudyData& subset_data,
                                                     const SimilarityMatrix& reference,
                                                     BootstrapOptions options) {
    std::vector<std::string> study_cards;
    study_cards.reserve(subset_data.cards.size());
    for (const auto& card : subset_data.cards) study_cards.push_back(card.id);
    if (reference.card_ids != study_cards)
        fail(ErrorCode::dimension_mismatch,
             "bootstrap_between: reference cards do not align with the study");
    detail::BootstrapContext ctx;
    ctx.data = &subset_data;
    ctx.reference = &reference;
    ctx.options = std::move(options);
    return detail::run_bootstrap(ctx, BootstrapMode::between);
}

// Smallest n whose mean reaches the target; absent when never reached.
inline std::optional<int> threshold_n(const BootstrapCurve& curve, double target) {
    for (const auto& point : curve.points)
        if (point.mean >= target) return point.n;
    return std::nullopt;
}

inline std::string curves_to_csv(const std::vector<BootstrapCurve>& curves) {
    std::string out = "metric,n,mean,sd,iterations_used\n";
    for (const auto& curve : curves)
        for (const auto& point : curve.points)
            out += std::string(to_string(curve.metric)) + "," + std::to_string(point.n) + "," +
                   csv::format_double(point.mean) + "," + csv::format_double(point.sd) + "," +
                   std::to_string(point.iterations_used) + "\n";
    return out;
}

inline std::vector<BootstrapCurve> curves_from_csv(const std::string& path) {
    const auto rows = csv::read_rows(path);
    if (rows.empty() || rows[0] != std::vector<std::string>{"metric", "n", "mean", "sd",
                                                            "iterations_used"})
        fail(ErrorCode::parse_error, path + ": expected bootstrap curve header");
    std::vector<BootstrapCurve> curves;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != 5)
            fail(ErrorCode::parse_error, path + ": malformed row " + std::to_string(i));
        BootstrapMetric metric;
        if (row[0] == "mantel_r") metric = BootstrapMetric::mantel_r;
        else if (row[0] == "ami") metric = BootstrapMetric::ami;
        else fail(ErrorCode::parse_error, path + ": unknown metric '" + row[0] + "'");
        auto it = std::find_if(curves.begin(), curves.end(),
                               [&](const BootstrapCurve& c) { return c.metric == metric; });
        if (it == curves.end()) {
            curves.push_back(BootstrapCurve{metric, BootstrapMode::within, {}});
            it = std::prev(curves.end());
        }
        BootstrapPoint point;
        point.n = static_cast<int>(csv::parse_long(row[1], path));
        point.mean = csv::parse_double(row[2], path);
        point.sd = csv::parse_double(row[3], path);
        point.iterations_used = static_cast<int>(csv::parse_long(row[4], path));
        it->points.push_back(point);
    }
    return curves;
}

} // namespace cardsort
