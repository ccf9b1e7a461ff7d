#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "cardsort/error.hpp"
#include "cardsort/parallel.hpp"
#include "cardsort/rng.hpp"
#include "cardsort/similarity.hpp"

namespace cardsort {

enum class StatisticName { U, chi2, H, mantel_r, spearman_rho };

inline const char* to_string(StatisticName name) {
    switch (name) {
        case StatisticName::U: return "U";
        case StatisticName::chi2: return "chi2";
        case StatisticName::H: return "H";
        case StatisticName::mantel_r: return "mantel_r";
        case StatisticName::spearman_rho: return "spearman_rho";
    }
    return "unknown";
}

struct TestResult {
    StatisticName statistic_name;
    double statistic = 0.0;
    std::optional<double> z;
    std::optional<int> df;
    double p = 1.0;
    std::optional<double> effect_size_r;
    int n = 0;
};

enum class Alternative { two_sided, less, greater };

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Survival function of the chi-squared distribution.
inline double chi2_sf(double x, int df) {
    if (x <= 0) return 1.0;
    return boost::math::gamma_q(df / 2.0, x / 2.0);
}

namespace rank {

// Midranks (1-based); ties share the average of the rank positions they span.
inline std::vector<double> midranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

// Sum of (t^3 - t) over tie groups, the tie term shared by the U and H tests.
inline double tie_term(const std::vector<double>& pooled) {
    std::map<double, std::size_t> counts;
    for (double v : pooled) ++counts[v];
    double sum = 0;
    for (const auto& [value, t] : counts) {
        (void)value;
        const double td = static_cast<double>(t);
        sum += td * td * td - td;
    }
    return sum;
}

} // namespace rank

// Mann-Whitney U with midrank tie handling. The normal approximation applies
// the tie correction to the variance and a 0.5 continuity correction; the
// reported U is always min(U1, U2) regardless of the alternative. z is signed
// positive when xs tend larger than ys.
inline TestResult mann_whitney(const std::vector<double>& xs, const std::vector<double>& ys,
                               Alternative alternative = Alternative::two_sided) {
    if (xs.empty() || ys.empty()) fail(ErrorCode::empty_input, "mann_whitney: empty sample");
    const double n1 = static_cast<double>(xs.size());
    const double n2 = static_cast<double>(ys.size());
    const double n = n1 + n2;

    std::vector<double> pooled = xs;
    pooled.insert(pooled.end(), ys.begin(), ys.end());
    const auto ranks = rank::midranks(pooled);
    double r1 = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) r1 += ranks[i];

    const double u1 = r1 - n1 * (n1 + 1.0) / 2.0; // pairs with x > y, ties as 1/2
    const double u2 = n1 * n2 - u1;
    const double mean = n1 * n2 / 2.0;
    const double ties = rank::tie_term(pooled);
    const double variance = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    const double sd = variance > 0 ? std::sqrt(variance) : 0.0;

    double z = 0.0;
    double p = 1.0;
    if (sd > 0) {
        const double diff = u1 - mean;
        const double cc = diff > 0 ? -0.5 : (diff < 0 ? 0.5 : 0.0);
        z = (diff + cc) / sd;
        switch (alternative) {
            case Alternative::two_sided: {
                const double zz = std::max(0.0, std::abs(diff) - 0.5) / sd;
                p = std::min(1.0, 2.0 * (1.0 - normal_cdf(zz)));
                break;
            }
            case Alternative::greater:
                p = 1.0 - normal_cdf((diff - 0.5) / sd);
                break;
            case Alternative::less:
                p = normal_cdf((diff + 0.5) / sd);
                break;
        }
    }

    TestResult result;
    result.statistic_name = StatisticName::U;
    result.statistic = std::min(u1, u2);
    result.z = z;
    result.p = p;
    result.effect_size_r = std::abs(z) / std::sqrt(n);
    result.n = static_cast<int>(n);
    return result;
}

// Exact Mann-Whitney p by full enumeration of the C(n1+n2, n1) assignments of
// the pooled observations. Serves as the small-sample oracle for the normal
// approximation; ties are handled exactly through the permutation null.
inline TestResult mann_whitney_exact(const std::vector<double>& xs, const std::vector<double>& ys,
                                     Alternative alternative = Alternative::two_sided) {
    if (xs.empty() || ys.empty()) fail(ErrorCode::empty_input, "mann_whitney_exact: empty sample");
    const std::size_t n1 = xs.size();
    const std::size_t n2 = ys.size();
    const std::size_t n = n1 + n2;
    if (n > 20) fail(ErrorCode::too_large, "mann_whitney_exact: n1+n2 must be <= 20");

    std::vector<double> pooled = xs;
    pooled.insert(pooled.end(), ys.begin(), ys.end());

    // score[i][j]: contribution of (pooled[i] in X, pooled[j] in Y) to U1.
    std::vector<double> score(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            score[i * n + j] = pooled[i] > pooled[j] ? 1.0 : (pooled[i] == pooled[j] ? 0.5 : 0.0);

    auto u_of = [&](const std::vector<char>& in_x) {
        double u = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_x[i]) continue;
            for (std::size_t j = 0; j < n; ++j)
                if (!in_x[j]) u += score[i * n + j];
        }
        return u;
    };

    std::vector<char> observed(n, 0);
    std::fill(observed.begin(), observed.begin() + static_cast<std::ptrdiff_t>(n1), 1);
    const double u_obs = u_of(observed);

    // prev_permutation over a descending-sorted mask enumerates every
    // distinct placement exactly once.
    std::vector<char> mask = observed;
    std::sort(mask.begin(), mask.end(), std::greater<>());
    std::uint64_t total = 0;
    std::uint64_t count_ge = 0;
    std::uint64_t count_le = 0;
    const double eps = 1e-9;
    do {
        const double u = u_of(mask);
        ++total;
        if (u >= u_obs - eps) ++count_ge;
        if (u <= u_obs + eps) ++count_le;
    } while (std::prev_permutation(mask.begin(), mask.end()));

    const double p_greater = static_cast<double>(count_ge) / static_cast<double>(total);
    const double p_less = static_cast<double>(count_le) / static_cast<double>(total);
    double p = 1.0;
    switch (alternative) {
        case Alternative::two_sided: p = std::min(1.0, 2.0 * std::min(p_less, p_greater)); break;
        case Alternative::greater: p = p_greater; break;
        case Alternative::less: p = p_less; break;
    }

    TestResult result;
    result.statistic_name = StatisticName::U;
    result.statistic = std::min(u_obs, static_cast<double>(n1 * n2) - u_obs);
    result.p = p;
    result.n = static_cast<int>(n);
    return result;
}

// Pearson chi-squared on an R x C count table, no continuity correction.
inline TestResult chi_squared(const std::vector<std::vector<std::int64_t>>& table) {
    if (table.size() < 2 || table[0].size() < 2)
        fail(ErrorCode::invalid_argument, "chi_squared: table must be at least 2x2");
    const std::size_t rows = table.size();
    const std::size_t cols = table[0].size();
    for (const auto& row : table) {
        if (row.size() != cols) fail(ErrorCode::invalid_argument, "chi_squared: ragged table");
        for (auto v : row)
            if (v < 0) fail(ErrorCode::invalid_argument, "chi_squared: negative count");
    }

    std::vector<double> row_sum(rows, 0), col_sum(cols, 0);
    double total = 0;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            row_sum[i] += static_cast<double>(table[i][j]);
            col_sum[j] += static_cast<double>(table[i][j]);
            total += static_cast<double>(table[i][j]);
        }
    for (double s : row_sum)
        if (s == 0) fail(ErrorCode::degenerate_table, "chi_squared: zero row marginal");
    for (double s : col_sum)
        if (s == 0) fail(ErrorCode::degenerate_table, "chi_squared: zero column marginal");

    double stat = 0;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const double expected = row_sum[i] * col_sum[j] / total;
            const double diff = static_cast<double>(table[i][j]) - expected;
            stat += diff * diff / expected;
        }

    TestResult result;
    result.statistic_name = StatisticName::chi2;
    result.statistic = stat;
    result.df = static_cast<int>((rows - 1) * (cols - 1));
    result.p = chi2_sf(stat, *result.df);
    result.n = static_cast<int>(total);
    return result;
}

// Kruskal-Wallis H with tie correction; chi-squared approximation for p.
// When every pooled value ties, H is defined as 0 with p = 1.
inline TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) fail(ErrorCode::invalid_argument, "kruskal_wallis: need >= 2 groups");
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.empty()) fail(ErrorCode::empty_group, "kruskal_wallis: empty group");
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    const double n = static_cast<double>(pooled.size());
    const auto ranks = rank::midranks(pooled);

    double h = 0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rsum = 0;
        for (std::size_t i = 0; i < g.size(); ++i) rsum += ranks[offset + i];
        h += rsum * rsum / static_cast<double>(g.size());
        offset += g.size();
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

    const double correction = 1.0 - rank::tie_term(pooled) / (n * n * n - n);
    TestResult result;
    result.statistic_name = StatisticName::H;
    result.df = static_cast<int>(groups.size()) - 1;
    result.n = static_cast<int>(n);
    if (correction <= 0) {
        result.statistic = 0.0;
        result.p = 1.0;
    } else {
        result.statistic = h / correction;
        result.p = chi2_sf(result.statistic, *result.df);
    }
    return result;
}

namespace detail {

inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0) fail(ErrorCode::constant_input, "correlation of constant input");
    return sxy / std::sqrt(sxx * syy);
}

} // namespace detail

// Spearman rank correlation: Pearson correlation of midranks.
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        fail(ErrorCode::dimension_mismatch, "spearman: length mismatch");
    if (xs.size() < 3) fail(ErrorCode::invalid_argument, "spearman: need >= 3 observations");
    return detail::pearson(rank::midranks(xs), rank::midranks(ys));
}

namespace detail {

// Off-diagonal upper-triangle entries defined in both matrices.
inline void mantel_pairs(const SimilarityMatrix& a, const SimilarityMatrix& b,
                         const std::vector<std::size_t>& perm_b, std::vector<double>& va,
                         std::vector<double>& vb) {
    va.clear();
    vb.clear();
    const std::size_t m = a.size();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const double x = a.at(i, j);
            const double y = b.at(perm_b[i], perm_b[j]);
            if (std::isnan(x) || std::isnan(y)) continue;
            va.push_back(x);
            vb.push_back(y);
        }
}

} // namespace detail

// Spearman correlation between the defined off-diagonal entries of two
// matrices over the same cards in the same order. Pairs undefined in either
// matrix are excluded pairwise.
inline double mantel_r(const SimilarityMatrix& a, const SimilarityMatrix& b) {
    if (a.size() != b.size() || a.card_ids != b.card_ids)
        fail(ErrorCode::dimension_mismatch, "mantel: matrices disagree on cards");
    std::vector<std::size_t> identity(a.size());
    std::iota(identity.begin(), identity.end(), 0);
    std::vector<double> va, vb;
    detail::mantel_pairs(a, b, identity, va, vb);
    if (va.size() < 3) fail(ErrorCode::too_few_pairs, "mantel: fewer than 3 defined pairs");
    return spearman(va, vb);
}

// Mantel permutation test; the rows and columns of b are permuted together
// and the one-sided p counts permuted correlations >= the observed one.
inline TestResult mantel(const SimilarityMatrix& a, const SimilarityMatrix& b, int permutations,
                         std::uint64_t seed, int threads = 1) {
    if (permutations < 1) fail(ErrorCode::invalid_argument, "mantel: permutations must be >= 1");
    if (a.size() != b.size() || a.card_ids != b.card_ids)
        fail(ErrorCode::dimension_mismatch, "mantel: matrices disagree on cards");

    const std::size_t m = a.size();
    std::vector<std::size_t> identity(m);
    std::iota(identity.begin(), identity.end(), 0);
    std::vector<double> va, vb;
    detail::mantel_pairs(a, b, identity, va, vb);
    if (va.size() < 3) fail(ErrorCode::too_few_pairs, "mantel: fewer than 3 defined pairs");
    const std::size_t n_pairs = va.size();
    const double observed = spearman(va, vb);

    // Per-permutation RNG substreams keep the result independent of the
    // execution order.
    const Rng rng(seed);
    const auto hits = parallel_map<char>(
        static_cast<std::size_t>(permutations), threads, [&](std::size_t p) -> char {
            Rng sub = rng.substream(static_cast<std::uint64_t>(p));
            std::vector<std::size_t> perm(m);
            std::iota(perm.begin(), perm.end(), 0);
            sub.shuffle(perm);
            std::vector<double> pa, pb;
            detail::mantel_pairs(a, b, perm, pa, pb);
            if (pa.size() < 3) return 0;
            try {
                return spearman(pa, pb) >= observed - 1e-12 ? 1 : 0;
            } catch (const Error&) {
                return 0; // constant permuted layout carries no evidence
            }
        });
    int count_ge = 0;
    for (char h : hits) count_ge += h;

    TestResult result;
    result.statistic_name = StatisticName::mantel_r;
    result.statistic = observed;
    result.p = (1.0 + count_ge) / (1.0 + permutations);
    result.n = static_cast<int>(n_pairs);
    return result;
}

} // namespace cardsort
