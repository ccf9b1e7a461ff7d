#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "cardsort/error.hpp"
#include "cardsort/model.hpp"
#include "cardsort/parallel.hpp"
#include "cardsort/rng.hpp"
#include "cardsort/similarity.hpp"
#include "cardsort/stats.hpp"

namespace cardsort {

struct CohortSplit {
    std::string covariate_name;
    StudyData low;
    StudyData high;
    double cut_low = 0;  // highest covariate value inside the low tercile
    double cut_high = 0; // lowest covariate value inside the high tercile
    bool degenerate = false; // ties collapse the tercile boundaries
};

struct PermutationBaseline {
    int n_permutations = 0;
    std::vector<double> values; // e.g. mantel r per permutation
    double mean = 0;
    double sd = 0; // population standard deviation over the values
};

namespace detail {

inline double covariate_of(const SortRecord& rec, const std::string& name) {
    const auto it = rec.covariates.find(name);
    if (it == rec.covariates.end())
        fail(ErrorCode::missing_covariate, "participant '" + rec.participant_id +
                                               "' lacks covariate '" + name + "'");
    return it->second;
}

// Record indices in canonical participant-id order, so draws depend only on
// which participants exist, never on record order in the file.
inline std::vector<std::size_t> canonical_order(const StudyData& data) {
    std::vector<std::size_t> order(data.records.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data.records[a].participant_id < data.records[b].participant_id;
    });
    return order;
}

} // namespace detail

// Lower and upper terciles by covariate score. Records are ordered by
// (score, participant id); the lowest floor(N/3) go to the low cohort and the
// highest floor(N/3) to the high cohort, so boundary ties resolve by stable
// participant-id order. A full tie across the cut is flagged as degenerate.
inline CohortSplit split_terciles(const StudyData& data, const std::string& covariate) {
    const std::size_t n = data.records.size();
    if (n == 0) fail(ErrorCode::empty_input, "split_terciles: no records");
    for (const auto& rec : data.records) detail::covariate_of(rec, covariate);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = detail::covariate_of(data.records[a], covariate);
        const double vb = detail::covariate_of(data.records[b], covariate);
        if (va != vb) return va < vb;
        return data.records[a].participant_id < data.records[b].participant_id;
    });

    const std::size_t q = n / 3;
    CohortSplit split;
    split.covariate_name = covariate;
    split.low = select_records(data, {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(q)});
    split.high = select_records(data, {order.end() - static_cast<std::ptrdiff_t>(q), order.end()});
    split.low.condition_name = data.condition_name + "/low-" + covariate;
    split.high.condition_name = data.condition_name + "/high-" + covariate;
    if (q > 0) {
        split.cut_low = detail::covariate_of(data.records[order[q - 1]], covariate);
        split.cut_high = detail::covariate_of(data.records[order[n - q]], covariate);
        split.degenerate = split.cut_low >= split.cut_high;
    }
    return split;
}

// Mantel test between the similarity matrices of the two cohorts.
inline TestResult subgroup_correlation(const CohortSplit& split, int permutations = 999,
                                       std::uint64_t seed = 0, int threads = 1) {
    if (split.low.records.empty() || split.high.records.empty())
        fail(ErrorCode::empty_group, "subgroup_correlation: empty cohort");
    const auto sim_low = compute_similarity(split.low).first;
    const auto sim_high = compute_similarity(split.high).first;
    return mantel(sim_low, sim_high, permutations, seed, threads);
}

// Chance baseline: per permutation, draw two disjoint uniform subgroups of
// the given size and record the mantel r between their similarity matrices.
inline PermutationBaseline permutation_baseline(const StudyData& data, int subgroup_size,
                                                int n_permutations, std::uint64_t seed,
                                                int threads = 1) {
    const std::size_t n = data.records.size();
    if (subgroup_size < 1)
        fail(ErrorCode::invalid_argument, "permutation_baseline: subgroup_size must be >= 1");
    if (2 * static_cast<std::size_t>(subgroup_size) > n)
        fail(ErrorCode::subgroup_too_large,
             "permutation_baseline: 2*subgroup_size exceeds record count");
    if (n_permutations < 1)
        fail(ErrorCode::invalid_argument, "permutation_baseline: need >= 1 permutations");

    const auto canonical = detail::canonical_order(data);
    const Rng rng(seed);
    const std::size_t s = static_cast<std::size_t>(subgroup_size);

    PermutationBaseline baseline;
    baseline.n_permutations = n_permutations;
    baseline.values = parallel_map<double>(
        static_cast<std::size_t>(n_permutations), threads, [&](std::size_t p) {
            Rng sub = rng.substream(p);
            std::vector<std::size_t> order = canonical;
            sub.shuffle(order);
            const StudyData ga = select_records(data, {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s)});
            const StudyData gb =
                select_records(data, {order.begin() + static_cast<std::ptrdiff_t>(s),
                                      order.begin() + static_cast<std::ptrdiff_t>(2 * s)});
            return mantel_r(compute_similarity(ga).first, compute_similarity(gb).first);
        });

    double sum = 0;
    for (double v : baseline.values) sum += v;
    baseline.mean = sum / static_cast<double>(n_permutations);
    double ss = 0;
    for (double v : baseline.values) ss += (v - baseline.mean) * (v - baseline.mean);
    baseline.sd = std::sqrt(ss / static_cast<double>(n_permutations));
    return baseline;
}

} // namespace cardsort
