#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "cardsort/error.hpp"
#include "cardsort/parallel.hpp"
#include "cardsort/stats.hpp"

namespace cardsort {

// Growth-curve families fitted to statistic-vs-sample-size points. Every
// family is the scaled cumulative form c * F(n; theta): the asymptote c is a
// free parameter capped at 1.05 because the fitted metric (a correlation)
// saturates below 1.
enum class FitFamily {
    normal_cdf,
    exponential,
    weibull_cdf,
    logistic,
    gompertz,
    gamma_cdf,
    beta_cdf,
    rayleigh_cdf,
    lognormal_cdf,
    pareto_cdf,
};

inline const char* to_string(FitFamily family) {
    switch (family) {
        case FitFamily::normal_cdf: return "normal_cdf";
        case FitFamily::exponential: return "exponential";
        case FitFamily::weibull_cdf: return "weibull_cdf";
        case FitFamily::logistic: return "logistic";
        case FitFamily::gompertz: return "gompertz";
        case FitFamily::gamma_cdf: return "gamma_cdf";
        case FitFamily::beta_cdf: return "beta_cdf";
        case FitFamily::rayleigh_cdf: return "rayleigh_cdf";
        case FitFamily::lognormal_cdf: return "lognormal_cdf";
        case FitFamily::pareto_cdf: return "pareto_cdf";
    }
    return "unknown";
}

inline std::vector<FitFamily> all_fit_families() {
    return {FitFamily::normal_cdf, FitFamily::exponential, FitFamily::weibull_cdf,
            FitFamily::logistic,   FitFamily::gompertz,    FitFamily::gamma_cdf,
            FitFamily::beta_cdf,   FitFamily::rayleigh_cdf, FitFamily::lognormal_cdf,
            FitFamily::pareto_cdf};
}

// Parameter vector layout per family; params[0] is always the asymptote c.
inline std::vector<std::string> param_names(FitFamily family) {
    switch (family) {
        case FitFamily::normal_cdf: return {"c", "mu", "sigma"};
        case FitFamily::exponential: return {"c", "rate"};
        case FitFamily::weibull_cdf: return {"c", "scale", "shape"};
        case FitFamily::logistic: return {"c", "mu", "s"};
        case FitFamily::gompertz: return {"c", "mu", "s"};
        case FitFamily::gamma_cdf: return {"c", "shape", "scale"};
        case FitFamily::beta_cdf: return {"c", "alpha", "beta", "scale"};
        case FitFamily::rayleigh_cdf: return {"c", "sigma"};
        case FitFamily::lognormal_cdf: return {"c", "mu", "sigma"};
        case FitFamily::pareto_cdf: return {"c", "xm", "alpha"};
    }
    return {};
}

struct FitResult {
    FitFamily family;
    std::vector<double> params;
    double r_squared = -std::numeric_limits<double>::infinity();
    int n_points = 0;
};

struct FitPoint {
    double n;
    double mean;
};

namespace detail {

inline double eval_family(FitFamily family, const std::vector<double>& p, double n) {
    switch (family) {
        case FitFamily::normal_cdf:
            return p[0] * normal_cdf((n - p[1]) / p[2]);
        case FitFamily::exponential:
            return p[0] * (1.0 - std::exp(-p[1] * n));
        case FitFamily::weibull_cdf:
            return n <= 0 ? 0.0 : p[0] * (1.0 - std::exp(-std::pow(n / p[1], p[2])));
        case FitFamily::logistic:
            return p[0] / (1.0 + std::exp(-(n - p[1]) / p[2]));
        case FitFamily::gompertz:
            return p[0] * std::exp(-std::exp(-(n - p[1]) / p[2]));
        case FitFamily::gamma_cdf:
            return n <= 0 ? 0.0 : p[0] * boost::math::gamma_p(p[1], n / p[2]);
        case FitFamily::beta_cdf: {
            if (n <= 0) return 0.0;
            const double x = std::min(n / p[3], 1.0);
            return p[0] * boost::math::ibeta(p[1], p[2], x);
        }
        case FitFamily::rayleigh_cdf:
            return n <= 0 ? 0.0 : p[0] * (1.0 - std::exp(-n * n / (2.0 * p[1] * p[1])));
        case FitFamily::lognormal_cdf:
            return n <= 0 ? 0.0 : p[0] * normal_cdf((std::log(n) - p[1]) / p[2]);
        case FitFamily::pareto_cdf:
            return n < p[1] ? 0.0 : p[0] * (1.0 - std::pow(p[1] / n, p[2]));
    }
    return 0.0;
}

struct ParamBox {
    double lo;
    double hi;
};

inline std::vector<ParamBox> param_boxes(FitFamily family, double n_lo, double n_hi) {
    const double span = std::max(n_hi - n_lo, 1.0);
    const ParamBox c{1e-4, 1.05};
    switch (family) {
        case FitFamily::normal_cdf:
            return {c, {-2.0 * n_hi, 2.0 * n_hi}, {1e-3, 4.0 * n_hi}};
        case FitFamily::exponential:
            return {c, {1e-6, 10.0}};
        case FitFamily::weibull_cdf:
            return {c, {1e-3, 4.0 * n_hi}, {0.05, 20.0}};
        case FitFamily::logistic:
            return {c, {-2.0 * n_hi, 2.0 * n_hi}, {1e-3, 2.0 * n_hi}};
        case FitFamily::gompertz:
            return {c, {-2.0 * n_hi, 2.0 * n_hi}, {1e-3, 2.0 * n_hi}};
        case FitFamily::gamma_cdf:
            return {c, {0.05, 100.0}, {1e-3, 4.0 * n_hi}};
        case FitFamily::beta_cdf:
            return {c, {0.05, 100.0}, {0.05, 100.0}, {std::max(1.0, n_lo), 8.0 * n_hi}};
        case FitFamily::rayleigh_cdf:
            return {c, {1e-3, 4.0 * n_hi}};
        case FitFamily::lognormal_cdf:
            return {c, {-10.0, std::log(n_hi) + 5.0}, {1e-3, 10.0}};
        case FitFamily::pareto_cdf:
            return {c, {1e-3, n_hi}, {0.05, 50.0}};
    }
    (void)span;
    return {};
}

// 16 deterministic starting points per family, spread over data-informed
// anchor values for each parameter.
inline std::vector<std::vector<double>> start_grid(FitFamily family, double n_lo, double n_hi,
                                                   double y_max) {
    const double c1 = std::min(1.05, std::max(0.1, y_max / 0.98));
    const double c2 = std::min(1.05, std::max(0.1, y_max * 1.08));
    const double mid = 0.5 * (n_lo + n_hi);
    const double span = std::max(n_hi - n_lo, 1.0);

    std::vector<std::vector<double>> anchors; // one list per parameter
    switch (family) {
        case FitFamily::normal_cdf:
            anchors = {{c1, c2}, {n_lo * 0.5, mid, n_lo, n_hi}, {span / 4.0, span}};
            break;
        case FitFamily::exponential:
            anchors = {{c1, c2}, {0.5 / std::max(n_lo, 1.0), 1.0 / mid, 2.0 / n_hi, 8.0 / n_hi,
                                  0.02, 0.2, 1.0, 3.0}};
            break;
        case FitFamily::weibull_cdf:
            anchors = {{c1, c2}, {n_lo, mid}, {0.7, 1.5, 3.0, 6.0}};
            break;
        case FitFamily::logistic:
            anchors = {{c1, c2}, {n_lo * 0.5, mid, n_lo, n_hi}, {span / 8.0, span / 2.0}};
            break;
        case FitFamily::gompertz:
            anchors = {{c1, c2}, {n_lo * 0.5, mid, n_lo, n_hi}, {span / 8.0, span / 2.0}};
            break;
        case FitFamily::gamma_cdf:
            anchors = {{c1, c2}, {0.7, 1.5, 3.0, 8.0}, {mid / 2.0, mid / 8.0}};
            break;
        case FitFamily::beta_cdf:
            anchors = {{c1, c2}, {1.0, 3.0}, {1.0, 3.0}, {1.5 * n_hi, 3.0 * n_hi}};
            break;
        case FitFamily::rayleigh_cdf:
            anchors = {{c1, c2}, {n_lo / 2.0, n_lo, mid, n_hi, span / 4.0, span, 2.0 * n_hi,
                                  n_hi / 4.0}};
            break;
        case FitFamily::lognormal_cdf:
            anchors = {{c1, c2}, {std::log(std::max(n_lo, 1.0)), std::log(mid),
                                  std::log(n_hi), 0.0},
                       {0.3, 1.0}};
            break;
        case FitFamily::pareto_cdf:
            anchors = {{c1, c2}, {n_lo * 0.25, n_lo * 0.75}, {0.5, 1.5, 3.0, 8.0}};
            break;
    }

    // Cartesian combination trimmed/cycled to exactly 16 starts.
    std::vector<std::vector<double>> starts;
    for (int i = 0; i < 16; ++i) {
        std::vector<double> start;
        int idx = i;
        for (const auto& list : anchors) {
            start.push_back(list[static_cast<std::size_t>(idx) % list.size()]);
            idx /= static_cast<int>(list.size());
        }
        starts.push_back(std::move(start));
    }
    return starts;
}

// Golden-section minimization of a unimodal slice; deterministic and
// derivative-free, which keeps all ten families on one code path. The
// effective tolerance never drops below the floating-point spacing of the
// bracket, and the iteration count is bounded outright.
template <typename F>
double golden_min(const F& f, double lo, double hi, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    tol = std::max(tol, (std::abs(lo) + std::abs(hi) + 1.0) * 1e-15);
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 120 && b - a > tol; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    const double mid = 0.5 * (a + b);
    return f(mid) <= std::min(f1, f2) ? mid : (f1 <= f2 ? x1 : x2);
}

// Coordinate-wise golden-section refinement from each starting grid point.
// Each coordinate searches a bracket centered on the incumbent; brackets grow
// when the line minimum lands at their edge (the descent is still moving) and
// shrink geometrically otherwise, down to the 1e-10 residual tolerance.
// Starts that fall far behind the incumbent best are abandoned early.
inline std::pair<std::vector<double>, double> fit_family(FitFamily family,
                                                         const std::vector<FitPoint>& points) {
    const auto boxes = param_boxes(
        family, points.front().n, points.back().n);
    double y_max = 0;
    for (const auto& pt : points) y_max = std::max(y_max, pt.mean);
    const auto starts = start_grid(family, points.front().n, points.back().n, y_max);

    auto ss_res = [&](const std::vector<double>& params) {
        double ss = 0;
        for (const auto& pt : points) {
            const double diff = eval_family(family, params, pt.n) - pt.mean;
            ss += diff * diff;
        }
        return std::isfinite(ss) ? ss : std::numeric_limits<double>::infinity();
    };

    constexpr double kTolSS = 1e-10;
    std::vector<double> best_params;
    double best_ss = std::numeric_limits<double>::infinity();

    for (const auto& start : starts) {
        std::vector<double> params = start;
        for (std::size_t p = 0; p < params.size(); ++p)
            params[p] = std::clamp(params[p], boxes[p].lo, boxes[p].hi);
        double ss = ss_res(params);
        std::vector<double> width(params.size());
        for (std::size_t p = 0; p < params.size(); ++p)
            width[p] = 0.5 * (boxes[p].hi - boxes[p].lo);

        for (int sweep = 0; sweep < 200; ++sweep) {
            std::vector<bool> at_edge(params.size(), false);
            const double ss_before = ss;
            for (std::size_t p = 0; p < params.size(); ++p) {
                if (width[p] < 1e-13 * (1.0 + std::abs(params[p]))) continue;
                const double lo = std::max(boxes[p].lo, params[p] - width[p]);
                const double hi = std::min(boxes[p].hi, params[p] + width[p]);
                if (hi - lo < 1e-14) continue;
                const double candidate = golden_min(
                    [&](double v) {
                        std::vector<double> trial = params;
                        trial[p] = v;
                        return ss_res(trial);
                    },
                    lo, hi, (hi - lo) * 1e-2);
                std::vector<double> trial = params;
                trial[p] = candidate;
                const double trial_ss = ss_res(trial);
                if (trial_ss < ss) {
                    params = std::move(trial);
                    ss = trial_ss;
                }
                const double margin = 0.05 * (hi - lo);
                if ((candidate - lo < margin && lo > boxes[p].lo) ||
                    (hi - candidate < margin && hi < boxes[p].hi))
                    at_edge[p] = true;
            }

            double max_rel_width = 0;
            for (std::size_t p = 0; p < params.size(); ++p) {
                const double range = 0.5 * (boxes[p].hi - boxes[p].lo);
                width[p] = at_edge[p] ? std::min(width[p] * 2.0, range) : width[p] * 0.55;
                max_rel_width =
                    std::max(max_rel_width, width[p] / std::max(1.0, std::abs(params[p])));
            }
            if (max_rel_width < 1e-12 && ss_before - ss < kTolSS) break;
            if (sweep >= 12 && ss > 10.0 * best_ss + 1e-15) break; // hopeless start
        }

        if (ss < best_ss) {
            best_ss = ss;
            best_params = params;
        }
    }
    return {best_params, best_ss};
}

} // namespace detail

struct FitOutput {
    std::vector<FitResult> fits;       // sorted by (r_squared desc, family name asc)
    std::vector<std::string> warnings; // families excluded from the output
};

// Least-squares fit of each family to the (n, mean) points with n > min_n,
// scored by R^2 = 1 - SS_res / SS_tot. Families whose fit diverges or that
// have more parameters than points are excluded with a warning rather than
// failing the whole analysis. Family fits are independent; threads > 1 fits
// them in parallel with identical results.
inline FitOutput fit_growth(const std::vector<FitPoint>& raw_points,
                            const std::vector<FitFamily>& families, int min_n = 10,
                            int threads = 1) {
    std::vector<FitPoint> points;
    for (const auto& pt : raw_points)
        if (pt.n > static_cast<double>(min_n)) points.push_back(pt);
    std::sort(points.begin(), points.end(),
              [](const FitPoint& a, const FitPoint& b) { return a.n < b.n; });
    if (points.size() < 4)
        fail(ErrorCode::too_few_points,
             "fit_growth: need at least 4 points above min_n = " + std::to_string(min_n));

    double mean_y = 0;
    for (const auto& pt : points) mean_y += pt.mean;
    mean_y /= static_cast<double>(points.size());
    double ss_tot = 0;
    for (const auto& pt : points) ss_tot += (pt.mean - mean_y) * (pt.mean - mean_y);

    struct FamilyOutcome {
        std::optional<FitResult> fit;
        std::string warning;
    };
    const auto outcomes = parallel_map<FamilyOutcome>(
        families.size(), threads, [&](std::size_t fi) -> FamilyOutcome {
            const FitFamily family = families[fi];
            const std::size_t n_params = param_names(family).size();
            if (points.size() < n_params + 1)
                return {std::nullopt, std::string(to_string(family)) +
                                          ": skipped, fewer points than parameters + 1"};
            const auto [params, ss] = detail::fit_family(family, points);
            if (params.empty() || !std::isfinite(ss) || ss_tot <= 0)
                return {std::nullopt, std::string(to_string(family)) + ": fit diverged"};
            FitResult result;
            result.family = family;
            result.params = params;
            result.r_squared = 1.0 - ss / ss_tot;
            result.n_points = static_cast<int>(points.size());
            return {std::move(result), {}};
        });

    FitOutput out;
    for (const auto& outcome : outcomes) {
        if (outcome.fit)
            out.fits.push_back(*outcome.fit);
        else
            out.warnings.push_back(outcome.warning);
    }

    std::sort(out.fits.begin(), out.fits.end(), [](const FitResult& a, const FitResult& b) {
        if (a.r_squared != b.r_squared) return a.r_squared > b.r_squared;
        return std::string(to_string(a.family)) < std::string(to_string(b.family));
    });
    return out;
}

inline double evaluate_fit(const FitResult& fit, double n) {
    return detail::eval_family(fit.family, fit.params, n);
}

// Smallest integer n whose fitted value reaches the target; absent when the
// target exceeds what the fitted curve can attain (its asymptote is the
// scale parameter c).
inline std::optional<int> required_n(const FitResult& fit, double target) {
    if (!(target <= fit.params[0])) return std::nullopt;
    std::int64_t hi = 1;
    const std::int64_t cap = 100'000'000;
    while (evaluate_fit(fit, static_cast<double>(hi)) < target) {
        hi *= 2;
        if (hi > cap) return std::nullopt;
    }
    std::int64_t lo = hi == 1 ? 1 : hi / 2;
    while (lo < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (evaluate_fit(fit, static_cast<double>(mid)) >= target)
            hi = mid;
        else
            lo = mid + 1;
    }
    return static_cast<int>(hi);
}

// Sample size determination for card sorting with randomized subsets:
// N = 15 - 90 * log10(|S| / |C|). Base-10 logarithm: it reproduces the
// ~35-participant optimum at 60% subsets, which the natural log does not.
inline double formula_sample_size_exact(int full_count, int subset_count) {
    if (full_count < 1 || subset_count < 1 || subset_count > full_count)
        fail(ErrorCode::invalid_ratio,
             "formula_sample_size: need 1 <= subset_count <= full_count");
    const double ratio = static_cast<double>(subset_count) / static_cast<double>(full_count);
    return 15.0 - 90.0 * std::log10(ratio);
}

// Rounded half-up to a whole participant count.
inline int formula_sample_size(int full_count, int subset_count) {
    return static_cast<int>(std::floor(formula_sample_size_exact(full_count, subset_count) + 0.5));
}

} // namespace cardsort
