#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "cardsort/csv.hpp"
#include "cardsort/error.hpp"
#include "cardsort/rng.hpp"
#include "cardsort/similarity.hpp"

namespace cardsort {

struct Clustering {
    std::vector<std::string> card_ids; // matrix order
    std::vector<int> assignment;       // cluster index per card, in [0, k)
    int k = 0;
    double inertia = 0.0; // within-cluster sum of squared distances

    int cluster_of(std::size_t card) const { return assignment[card]; }
};

namespace detail {

inline double sq_dist(const double* a, const double* b, std::size_t dim) {
    double s = 0;
    for (std::size_t d = 0; d < dim; ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

struct LloydResult {
    std::vector<int> assignment;
    double inertia;
};

inline LloydResult lloyd_once(const DissimilarityMatrix& features, int k, Rng rng) {
    const std::size_t m = features.size();
    const std::size_t dim = m;
    const std::size_t kk = static_cast<std::size_t>(k);

    // Greedy farthest-point seeding from an RNG-chosen first center; ties go
    // to the lowest index so restarts are fully reproducible.
    std::vector<std::vector<double>> centers;
    centers.reserve(kk);
    std::vector<double> min_dist(m, std::numeric_limits<double>::infinity());
    std::size_t first = static_cast<std::size_t>(rng.uniform_below(m));
    centers.emplace_back(features.row(first), features.row(first) + dim);
    while (centers.size() < kk) {
        for (std::size_t i = 0; i < m; ++i)
            min_dist[i] =
                std::min(min_dist[i], sq_dist(features.row(i), centers.back().data(), dim));
        std::size_t best = 0;
        for (std::size_t i = 1; i < m; ++i)
            if (min_dist[i] > min_dist[best]) best = i;
        centers.emplace_back(features.row(best), features.row(best) + dim);
    }

    std::vector<int> assignment(m, 0);
    std::vector<std::size_t> sizes(kk, 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < m; ++i) {
            int best = 0;
            double best_d = sq_dist(features.row(i), centers[0].data(), dim);
            for (std::size_t c = 1; c < kk; ++c) {
                const double d = sq_dist(features.row(i), centers[c].data(), dim);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            if (assignment[i] != best) {
                assignment[i] = best;
                changed = true;
            }
        }

        std::fill(sizes.begin(), sizes.end(), 0);
        for (std::size_t i = 0; i < m; ++i) ++sizes[static_cast<std::size_t>(assignment[i])];

        // Repair empty clusters by stealing the point farthest from its
        // current center, so exactly k clusters stay populated.
        for (std::size_t c = 0; c < kk; ++c) {
            while (sizes[c] == 0) {
                std::size_t worst = m;
                double worst_d = -1;
                for (std::size_t i = 0; i < m; ++i) {
                    const std::size_t owner = static_cast<std::size_t>(assignment[i]);
                    if (sizes[owner] < 2) continue;
                    const double d = sq_dist(features.row(i), centers[owner].data(), dim);
                    if (d > worst_d) {
                        worst_d = d;
                        worst = i;
                    }
                }
                if (worst == m) break; // no donor cluster, k > distinct points
                --sizes[static_cast<std::size_t>(assignment[worst])];
                assignment[worst] = static_cast<int>(c);
                ++sizes[c];
                changed = true;
            }
        }

        for (std::size_t c = 0; c < kk; ++c)
            std::fill(centers[c].begin(), centers[c].end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            auto& center = centers[static_cast<std::size_t>(assignment[i])];
            const double* row = features.row(i);
            for (std::size_t d = 0; d < dim; ++d) center[d] += row[d];
        }
        for (std::size_t c = 0; c < kk; ++c)
            if (sizes[c] > 0)
                for (double& v : centers[c]) v /= static_cast<double>(sizes[c]);

        if (!changed) break;
    }

    double inertia = 0;
    for (std::size_t i = 0; i < m; ++i)
        inertia += sq_dist(features.row(i), centers[static_cast<std::size_t>(assignment[i])].data(), dim);
    return {std::move(assignment), inertia};
}

} // namespace detail

// Best-of-restarts k-means over the rows of the dissimilarity matrix (each
// card is described by its distances to all cards). Deterministic given
// (seed, restarts): restarts use substreams of the seed and ties in inertia
// keep the earliest restart.
inline Clustering kmeans(const DissimilarityMatrix& features, int k, std::uint64_t seed,
                         int restarts = 10) {
    const std::size_t m = features.size();
    if (k < 1 || static_cast<std::size_t>(k) > m)
        fail(ErrorCode::invalid_k, "kmeans: k must be in [1, card count]");
    if (restarts < 1) fail(ErrorCode::invalid_argument, "kmeans: restarts must be >= 1");

    const Rng rng(seed);
    detail::LloydResult best{{}, std::numeric_limits<double>::infinity()};
    for (int r = 0; r < restarts; ++r) {
        auto run = detail::lloyd_once(features, k, rng.substream(static_cast<std::uint64_t>(r)));
        if (run.inertia < best.inertia) best = std::move(run);
    }

    Clustering out;
    out.card_ids = features.card_ids;
    out.assignment = std::move(best.assignment);
    out.k = k;
    out.inertia = best.inertia;
    return out;
}

// The k whose (k, inertia) point has the largest perpendicular distance to
// the chord joining the curve's endpoints; ties break toward smaller k.
inline int elbow_from_inertia(int k_min, const std::vector<double>& inertia) {
    const double x1 = k_min, y1 = inertia.front();
    const double x2 = k_min + static_cast<double>(inertia.size()) - 1, y2 = inertia.back();
    const double hyp = std::hypot(x2 - x1, y2 - y1);
    int best_k = k_min;
    double best_dev = -1;
    for (std::size_t i = 0; i < inertia.size(); ++i) {
        const double x = static_cast<double>(k_min) + static_cast<double>(i);
        const double dev =
            hyp == 0 ? 0.0
                     : std::abs((y2 - y1) * x - (x2 - x1) * inertia[i] + x2 * y1 - y2 * x1) / hyp;
        if (dev > best_dev + 1e-12) {
            best_dev = dev;
            best_k = static_cast<int>(x);
        }
    }
    return best_k;
}

// Elbow selection over an inclusive k range.
inline int elbow_k(const DissimilarityMatrix& features, int k_min, int k_max, std::uint64_t seed,
                   int restarts = 10) {
    const std::size_t m = features.size();
    if (k_min < 1 || k_max < k_min || static_cast<std::size_t>(k_max) > m)
        fail(ErrorCode::invalid_range, "elbow_k: range must satisfy 1 <= k_min <= k_max <= M");
    if (k_min == k_max) return k_min;

    std::vector<double> inertia;
    for (int k = k_min; k <= k_max; ++k)
        inertia.push_back(kmeans(features, k, seed, restarts).inertia);
    return elbow_from_inertia(k_min, inertia);
}

// Adjusted Mutual Information between two clusterings of the same card set:
// AMI = (MI - E[MI]) / (mean(H(a), H(b)) - E[MI]), with E[MI] computed by the
// exact hypergeometric summation over the contingency table (the permutation
// model). 1 for identical partitions, ~0 for independent ones.
inline double ami(const Clustering& a, const Clustering& b) {
    if (a.card_ids != b.card_ids) {
        // Accept the same card set in a different order by aligning on ids.
        std::vector<std::string> sa = a.card_ids, sb = b.card_ids;
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        if (sa != sb) fail(ErrorCode::domain_mismatch, "ami: clusterings cover different cards");
    }
    std::map<std::string, int> b_of;
    for (std::size_t i = 0; i < b.card_ids.size(); ++i) b_of[b.card_ids[i]] = b.assignment[i];

    const std::size_t n = a.card_ids.size();
    const int ka = a.k, kb = b.k;
    std::vector<std::int64_t> table(static_cast<std::size_t>(ka) * kb, 0);
    std::vector<std::int64_t> row(ka, 0), col(kb, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const int ca = a.assignment[i];
        const int cb = b_of.at(a.card_ids[i]);
        ++table[static_cast<std::size_t>(ca) * kb + cb];
        ++row[ca];
        ++col[cb];
    }

    const double nd = static_cast<double>(n);
    auto entropy = [&](const std::vector<std::int64_t>& counts) {
        double h = 0;
        for (auto c : counts)
            if (c > 0) h -= (c / nd) * std::log(c / nd);
        return h;
    };
    const double ha = entropy(row);
    const double hb = entropy(col);

    // Both partitions trivial in the same way (all-in-one, or all singletons)
    // convey identical structure.
    const bool a_trivial = ha == 0.0 || a.k == static_cast<int>(n);
    const bool b_trivial = hb == 0.0 || b.k == static_cast<int>(n);
    if (a_trivial && b_trivial && ha == hb) {
        bool identical = true;
        for (std::size_t i = 0; i < n && identical; ++i)
            for (std::size_t j = i + 1; j < n && identical; ++j)
                identical = (a.assignment[i] == a.assignment[j]) ==
                            (b_of.at(a.card_ids[i]) == b_of.at(a.card_ids[j]));
        if (identical) return 1.0;
    }

    double mi = 0;
    for (int i = 0; i < ka; ++i)
        for (int j = 0; j < kb; ++j) {
            const std::int64_t nij = table[static_cast<std::size_t>(i) * kb + j];
            if (nij == 0) continue;
            mi += (nij / nd) * std::log(nd * static_cast<double>(nij) /
                                        (static_cast<double>(row[i]) * static_cast<double>(col[j])));
        }

    // log(x!) table for the exact E[MI] terms.
    std::vector<double> lf(n + 1, 0.0);
    for (std::size_t i = 2; i <= n; ++i) lf[i] = lf[i - 1] + std::log(static_cast<double>(i));

    double emi = 0;
    for (int i = 0; i < ka; ++i) {
        const std::int64_t ai = row[i];
        if (ai == 0) continue;
        for (int j = 0; j < kb; ++j) {
            const std::int64_t bj = col[j];
            if (bj == 0) continue;
            const std::int64_t lo = std::max<std::int64_t>(1, ai + bj - static_cast<std::int64_t>(n));
            const std::int64_t hi = std::min(ai, bj);
            for (std::int64_t nij = lo; nij <= hi; ++nij) {
                const double term = (nij / nd) *
                                    std::log(nd * static_cast<double>(nij) /
                                             (static_cast<double>(ai) * static_cast<double>(bj)));
                const double log_prob = lf[ai] + lf[bj] + lf[n - ai] + lf[n - bj] - lf[n] -
                                        lf[nij] - lf[ai - nij] - lf[bj - nij] -
                                        lf[n - ai - bj + nij];
                emi += term * std::exp(log_prob);
            }
        }
    }

    const double normalizer = 0.5 * (ha + hb);
    double denominator = normalizer - emi;
    // Avoid division by ~0 when chance agreement saturates the normalizer.
    const double eps = std::numeric_limits<double>::epsilon();
    if (denominator < 0)
        denominator = std::min(denominator, -eps);
    else
        denominator = std::max(denominator, eps);
    return (mi - emi) / denominator;
}

inline std::string clustering_to_csv(const Clustering& clustering) {
    std::string out = "card_id,cluster\n";
    for (std::size_t i = 0; i < clustering.card_ids.size(); ++i)
        out += csv::quote(clustering.card_ids[i]) + "," +
               std::to_string(clustering.assignment[i]) + "\n";
    return out;
}

} // namespace cardsort
