#pragma once

// Truncated-Gaussian summaries of score distributions and calibration of the
// standard-deviation scale against human judgements.
//
// For an instance with empirical (mu, sigma) and scale lambda, the fitted
// distribution is N(mu, (lambda sigma)^2) truncated to [0, 2.5]; its mean and
// standard deviation are the calibrated score and uncertainty. The risk of a
// scale is 1 - max(0, UPS), UPS being the Pearson correlation between
// |mean - human| and std across a dataset.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "riskctl/calibration.hpp"
#include "riskctl/errors.hpp"
#include "riskctl/metrics.hpp"
#include "riskctl/parallel.hpp"
#include "riskctl/scoredata.hpp"

namespace riskctl::intervals {

struct TruncGaussian {
    double loc = 0.0;
    double scale = 0.0;
    double lo = scoredata::kScoreMin;
    double hi = scoredata::kScoreMax;
    double mean_hat = 0.0;
    double std_hat = 0.0;
};

struct IntervalResult {
    std::string instance_id;
    double lambda_scale = 1.0;
    double mean_hat = 0.0;
    double std_hat = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

namespace detail {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Mills ratio Q(x) / phi(x) for x >= 0. Direct below 25, where neither factor
// underflows; continued fraction above, where it converges in a few terms.
inline double mills_ratio(double x) {
    if (x < 25.0) return 0.5 * std::erfc(x * kInvSqrt2) / normal_pdf(x);
    // Q/phi = 1/(x+ 1/(x+ 2/(x+ 3/(x+ ...)))), evaluated backwards.
    double tail = x;
    for (int k = 40; k >= 1; --k) tail = x + k / tail;
    return 1.0 / tail;
}

struct StdMoments {
    double mean = 0.0;
    double var = 1.0;
};

// Mean and variance of a standard normal truncated to [a, b], with a >= 0.
inline StdMoments upper_tail_moments(double a, double b) {
    const double ratio = std::isinf(b) ? 0.0 : std::exp(-0.5 * (b - a) * (b + a));  // phi(b)/phi(a)
    const double mills_b = std::isinf(b) ? 0.0 : mills_ratio(b);
    const double d = mills_ratio(a) - mills_b * ratio;  // (Phi(b) - Phi(a)) / phi(a)
    if (!(d > 0.0) || !std::isfinite(d))
        throw NumericalError("truncation interval carries no representable probability mass");
    const double at_a = 1.0 / d;       // phi(a) / Z
    const double at_b = ratio / d;     // phi(b) / Z
    const double b_term = std::isinf(b) ? 0.0 : b * at_b;
    StdMoments m;
    m.mean = at_a - at_b;
    m.var = std::max(0.0, 1.0 + a * at_a - b_term - m.mean * m.mean);
    return m;
}

inline StdMoments truncated_std_moments(double a, double b) {
    if (!(b > a)) throw NumericalError("empty truncation interval");
    if (a >= 0.0) return upper_tail_moments(a, b);
    if (b <= 0.0) {
        auto m = upper_tail_moments(-b, -a);
        m.mean = -m.mean;
        return m;
    }
    const double width = b - a;
    if (width < 1e-5) {
        // Nearly uniform density over a tiny window straddling 0.
        return {0.5 * (a + b), width * width / 12.0};
    }
    // Straddles 0: both erf terms are positive, no cancellation.
    const double z = 0.5 * (std::erf(b * kInvSqrt2) - std::erf(a * kInvSqrt2));
    if (!(z > 0.0)) throw NumericalError("truncation interval carries no probability mass");
    const double pa = normal_pdf(a), pb = normal_pdf(b);
    StdMoments m;
    m.mean = (pa - pb) / z;
    m.var = std::max(0.0, 1.0 + (a * pa - b * pb) / z - m.mean * m.mean);
    return m;
}

}  // namespace detail

// Truncated normal with location mu and scale lambda_scale * sigma on
// [lo, hi]. A zero scale is a point mass at mu clamped into the support.
inline TruncGaussian fit_truncated(double mu, double sigma, double lambda_scale, double lo = scoredata::kScoreMin,
                                   double hi = scoredata::kScoreMax) {
    if (!(sigma >= 0.0)) throw DomainError("sigma must be >= 0");
    if (!(lambda_scale > 0.0)) throw DomainError("lambda_scale must be > 0");
    if (!(lo < hi)) throw DomainError("support must satisfy lo < hi");
    TruncGaussian out;
    out.loc = mu;
    out.scale = lambda_scale * sigma;
    out.lo = lo;
    out.hi = hi;
    if (out.scale == 0.0) {
        out.mean_hat = std::clamp(mu, lo, hi);
        out.std_hat = 0.0;
        return out;
    }
    const auto m = detail::truncated_std_moments((lo - mu) / out.scale, (hi - mu) / out.scale);
    out.mean_hat = std::clamp(mu + out.scale * m.mean, lo, hi);
    out.std_hat = out.scale * std::sqrt(m.var);
    return out;
}

inline IntervalResult make_interval(const std::string& id, const TruncGaussian& fit, double lambda_scale,
                                    double z = 1.0) {
    IntervalResult r;
    r.instance_id = id;
    r.lambda_scale = lambda_scale;
    r.mean_hat = fit.mean_hat;
    r.std_hat = fit.std_hat;
    r.lower = std::clamp(fit.mean_hat - z * fit.std_hat, fit.lo, fit.hi);
    r.upper = std::clamp(fit.mean_hat + z * fit.std_hat, fit.lo, fit.hi);
    return r;
}

// Pearson correlation between absolute errors and predicted std.
inline double ups(std::span<const double> abs_errors, std::span<const double> stds) {
    if (abs_errors.size() != stds.size()) throw LengthMismatch("ups: inputs differ in length");
    if (abs_errors.size() < 2) throw ZeroVariance("ups: need at least 2 instances");
    return metrics::pearson(abs_errors, stds);
}

// Per-instance inputs of the interval risk, computed once per dataset.
struct IntervalData {
    std::vector<std::string> ids;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> human;
    std::vector<double> full;  // NaN where absent

    [[nodiscard]] std::size_t size() const { return mu.size(); }
};

inline IntervalData prepare_intervals(const scoredata::Dataset& ds, bool require_human = true) {
    IntervalData d;
    for (const auto& inst : ds.instances) {
        const auto summary = scoredata::summarize_distribution(inst);
        d.ids.push_back(inst.id);
        d.mu.push_back(summary.mu);
        d.sigma.push_back(summary.sigma);
        d.human.push_back(require_human ? inst.human() : inst.human_score.value_or(std::nan("")));
        d.full.push_back(inst.full_score.value_or(std::nan("")));
    }
    return d;
}

struct UprEvaluation {
    double risk = 1.0;
    std::optional<double> ups;   // absent when undefined
    bool zero_variance = false;
};

inline UprEvaluation upr_evaluate(const IntervalData& data, double lambda_scale) {
    if (data.size() < 2) throw ZeroVariance("interval risk needs at least 2 instances");
    std::vector<double> errors(data.size()), stds(data.size());
    for (std::size_t k = 0; k < data.size(); ++k) {
        const auto fit = fit_truncated(data.mu[k], data.sigma[k], lambda_scale);
        errors[k] = std::abs(fit.mean_hat - data.human[k]);
        stds[k] = fit.std_hat;
    }
    UprEvaluation out;
    try {
        out.ups = ups(errors, stds);
        out.risk = 1.0 - std::max(0.0, *out.ups);
    } catch (const ZeroVariance&) {
        out.zero_variance = true;
        out.risk = 1.0;
    }
    return out;
}

inline double upr_risk(const IntervalData& data, double lambda_scale) {
    return upr_evaluate(data, lambda_scale).risk;
}

inline double upr_risk(const scoredata::Dataset& ds, double lambda_scale) {
    return upr_risk(prepare_intervals(ds), lambda_scale);
}

// Tolerance = the risk of the uncalibrated scale.
inline double step1_alpha(const IntervalData& data) { return upr_risk(data, 1.0); }
inline double step1_alpha(const scoredata::Dataset& ds) { return step1_alpha(prepare_intervals(ds)); }

// LTT over the scale grid. Does not throw when nothing is accepted; the
// result then has no lambda_hat.
inline calibration::CalibrationResult calibrate_intervals_unchecked(const IntervalData& data,
                                                                    const calibration::RiskSpec& spec) {
    if (spec.risk_kind != calibration::RiskKind::upr) throw ConfigError("interval calibration requires risk upr");
    spec.validate();
    if (data.size() < 2) throw ZeroVariance("interval calibration needs at least 2 instances");
    const auto& grid = spec.lambda_grid;
    std::vector<UprEvaluation> evals(grid.size());
    parallel_for(grid.size(), spec.workers, [&](std::size_t k) { evals[k] = upr_evaluate(data, grid[k]); });

    std::vector<double> risks(grid.size());
    double zero_variance_points = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        risks[k] = evals[k].risk;
        if (evals[k].zero_variance) zero_variance_points += 1.0;
    }
    const double alpha = spec.alpha ? *spec.alpha : step1_alpha(data);
    auto result = calibration::ltt_from_risks(grid, risks, alpha, spec.delta, static_cast<std::int64_t>(data.size()),
                                              spec.bound);
    result.risk_kind = calibration::RiskKind::upr;
    result.diagnostics["alpha_from_step1"] = spec.alpha ? 0.0 : 1.0;
    result.diagnostics["zero_variance_points"] = zero_variance_points;
    const auto base = upr_evaluate(data, 1.0);
    if (base.ups) result.diagnostics["ups_at_1"] = *base.ups;
    if (result.lambda_hat) {
        const auto at_hat = upr_evaluate(data, *result.lambda_hat);
        if (at_hat.ups) result.diagnostics["ups_at_lambda_hat"] = *at_hat.ups;
    }
    return result;
}

inline calibration::CalibrationResult calibrate_intervals(const IntervalData& data, const calibration::RiskSpec& spec) {
    auto result = calibrate_intervals_unchecked(data, spec);
    if (!result.lambda_hat)
        throw EmptyAcceptedSet("no scale has p < " + std::to_string(result.threshold) + " at alpha " +
                               std::to_string(result.alpha));
    return result;
}

inline calibration::CalibrationResult calibrate_intervals(const scoredata::Dataset& ds,
                                                          const calibration::RiskSpec& spec) {
    return calibrate_intervals(prepare_intervals(ds), spec);
}

inline std::vector<IntervalResult> predict_intervals(const IntervalData& data, double lambda_scale, double z = 1.0) {
    std::vector<IntervalResult> out;
    out.reserve(data.size());
    for (std::size_t k = 0; k < data.size(); ++k)
        out.push_back(make_interval(data.ids[k], fit_truncated(data.mu[k], data.sigma[k], lambda_scale), lambda_scale, z));
    return out;
}

}  // namespace riskctl::intervals
