#pragma once

// Lower-tail bounds g(t; R) >= P(Rhat <= t) for the mean of n losses in
// [0, 1] with true mean R, and the upper confidence bound obtained by
// inverting them:  Rhat+ = sup{ R : g(Rhat; R) >= delta }.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include "riskctl/errors.hpp"

namespace riskctl::concentration {

enum class TailBound { hoeffding, bentkus, hoeffding_bentkus };

inline const char* to_string(TailBound b) {
    switch (b) {
        case TailBound::hoeffding: return "hoeffding";
        case TailBound::bentkus: return "bentkus";
        case TailBound::hoeffding_bentkus: return "hb";
    }
    return "?";
}

inline TailBound tail_bound_from_string(const std::string& s) {
    if (s == "hoeffding") return TailBound::hoeffding;
    if (s == "bentkus") return TailBound::bentkus;
    if (s == "hb" || s == "hoeffding_bentkus") return TailBound::hoeffding_bentkus;
    throw ConfigError("unknown bound '" + s + "' (expected hb, hoeffding or bentkus)");
}

struct BoundParams {
    std::int64_t n = 1;
    double delta = 0.1;

    void validate() const {
        if (n < 1) throw DomainError("calibration size n must be >= 1");
        if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
    }
};

namespace detail {

// x * log(x / y) with 0 * log(0 / y) = 0.
inline double xlog_ratio(double x, double y) {
    return x == 0.0 ? 0.0 : x * std::log(x / y);
}

// ceil(n t), snapping to the nearest integer when n t is within rounding
// noise of it: an empirical risk k/n stored as a double can multiply back to
// k + 4e-16, which must not round up to k + 1.
inline std::int64_t ceil_count(double t, std::int64_t n) {
    const double x = static_cast<double>(n) * t;
    const double nearest = std::round(x);
    if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::int64_t>(nearest);
    return static_cast<std::int64_t>(std::ceil(x));
}

inline double log_binom_pmf(std::int64_t k, std::int64_t n, double p) {
    const double nn = static_cast<double>(n), kk = static_cast<double>(k);
    return std::lgamma(nn + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0) + kk * std::log(p) +
           (nn - kk) * std::log1p(-p);
}

}  // namespace detail

// f(t; R) = t log(t/R) + (1-t) log((1-t)/(1-R)), the Bernoulli KL divergence.
inline double hoeffding_f(double t, double R) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("hoeffding_f: t must lie in [0, 1]");
    if (!(R > 0.0 && R < 1.0)) throw DomainError("hoeffding_f: R must lie in (0, 1)");
    const double f = detail::xlog_ratio(t, R) + detail::xlog_ratio(1.0 - t, 1.0 - R);
    return f < 0.0 ? 0.0 : f;
}

// exp(-n f(t; R)) for t < R, 1 where the inequality is vacuous (t >= R).
// At R = 1 and t < 1 the bound is the limit exp(-inf) = 0.
inline double g_hoeffding(double t, double R, std::int64_t n) {
    if (n < 1) throw DomainError("g_hoeffding: n must be >= 1");
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("g_hoeffding: t must lie in [0, 1]");
    if (!(R >= 0.0 && R <= 1.0)) throw DomainError("g_hoeffding: R must lie in [0, 1]");
    if (t >= R) return 1.0;
    if (R == 1.0) return 0.0;
    return std::exp(-static_cast<double>(n) * hoeffding_f(t, R));
}

// P(Bin(n, p) <= k). The leading term is evaluated in log space; the rest
// follow by the pmf ratio recurrence, summing away from the mode so terms
// shrink monotonically and the loop can stop once they are negligible.
inline double binomial_cdf(std::int64_t k, std::int64_t n, double p) {
    if (n < 0) throw DomainError("binomial_cdf: n must be >= 0");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial_cdf: p must lie in [0, 1]");
    if (k < 0) return 0.0;
    if (k >= n) return 1.0;
    if (p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;

    const double q = 1.0 - p;
    const double odds = p / q;
    const auto mode = static_cast<std::int64_t>(std::floor(static_cast<double>(n + 1) * p));
    constexpr double kNegligible = 1e-18;

    if (k < mode) {
        double term = std::exp(detail::log_binom_pmf(k, n, p));
        double sum = term;
        for (std::int64_t j = k; j > 0; --j) {
            term *= static_cast<double>(j) / (static_cast<double>(n - j + 1) * odds);
            sum += term;
            if (term <= kNegligible * sum) break;
        }
        return std::min(1.0, sum);
    }

    double term = std::exp(detail::log_binom_pmf(k + 1, n, p));
    double upper = term;
    for (std::int64_t j = k + 1; j < n; ++j) {
        term *= static_cast<double>(n - j) / static_cast<double>(j + 1) * odds;
        upper += term;
        if (term <= kNegligible * upper) break;
    }
    return std::max(0.0, 1.0 - upper);
}

// min(1, e * P(Bin(n, R) <= ceil(n t))).
inline double g_bentkus(double t, double R, std::int64_t n) {
    if (n < 1) throw DomainError("g_bentkus: n must be >= 1");
    if (!(t >= 0.0)) throw DomainError("g_bentkus: t must be >= 0");
    if (!(R >= 0.0 && R <= 1.0)) throw DomainError("g_bentkus: R must lie in [0, 1]");
    const double cdf = binomial_cdf(detail::ceil_count(t, n), n, R);
    return std::min(1.0, std::numbers::e * cdf);
}

inline double g_hb(double t, double R, std::int64_t n) {
    return std::min(g_hoeffding(t, R, n), g_bentkus(t, R, n));
}

inline double tail_bound(TailBound kind, double t, double R, std::int64_t n) {
    switch (kind) {
        case TailBound::hoeffding: return g_hoeffding(t, R, n);
        case TailBound::bentkus: return g_bentkus(t, R, n);
        case TailBound::hoeffding_bentkus: return g_hb(t, R, n);
    }
    throw DomainError("unknown tail bound");
}

inline constexpr int kBisectionSteps = 60;

// sup{ R in [r_hat, 1] : g(r_hat; R) >= delta }. g(t; .) is non-increasing
// in R, so the feasible set is an interval starting at r_hat and bisection
// brackets its right end. Returns the upper end of the final bracket.
inline double ucb(double r_hat, const BoundParams& params, TailBound bound = TailBound::hoeffding_bentkus) {
    params.validate();
    if (!(r_hat >= 0.0 && r_hat <= 1.0)) throw DomainError("ucb: r_hat must lie in [0, 1]");
    if (r_hat >= 1.0) return 1.0;
    const double top = std::nextafter(1.0, 0.0);
    if (tail_bound(bound, r_hat, top, params.n) >= params.delta) return 1.0;

    double lo = r_hat, hi = 1.0;
    for (int step = 0; step < kBisectionSteps; ++step) {
        const double mid = 0.5 * (lo + hi);
        if (tail_bound(bound, r_hat, mid, params.n) >= params.delta)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

}  // namespace riskctl::concentration
