#pragma once

// Calibration types shared by the detection (riskcal) and interval paths:
// the risk specification, the result record, lambda grids, the monotone
// suffix rule and the Learn-Then-Test machinery (p-values from tail bounds,
// Bonferroni acceptance, lowest-p selection).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "riskctl/concentration.hpp"
#include "riskctl/errors.hpp"
#include "riskctl/parallel.hpp"
#include "riskctl/wordscore.hpp"

namespace riskctl::calibration {

using concentration::TailBound;
using wordscore::PredictionMode;

enum class RiskKind { fdr, fpr, upr };
enum class Method { monotone_ucb, ltt };

inline const char* to_string(RiskKind k) {
    switch (k) {
        case RiskKind::fdr: return "fdr";
        case RiskKind::fpr: return "fpr";
        case RiskKind::upr: return "upr";
    }
    return "?";
}

inline RiskKind risk_from_string(const std::string& s) {
    if (s == "fdr") return RiskKind::fdr;
    if (s == "fpr") return RiskKind::fpr;
    if (s == "upr") return RiskKind::upr;
    throw ConfigError("unknown risk '" + s + "' (expected fdr, fpr or upr)");
}

inline const char* to_string(Method m) { return m == Method::monotone_ucb ? "monotone_ucb" : "ltt"; }

// n evenly spaced points on [lo, hi].
inline std::vector<double> linear_grid(std::size_t n, double lo = 0.0, double hi = 1.0) {
    if (n < 2) throw ConfigError("grid needs at least 2 points");
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    g.back() = hi;
    return g;
}

// n geometrically spaced points on [lo, hi].
inline std::vector<double> geometric_grid(std::size_t n, double lo = 0.1, double hi = 10.0) {
    if (n < 2) throw ConfigError("grid needs at least 2 points");
    if (!(lo > 0.0 && hi > lo)) throw ConfigError("geometric grid needs 0 < lo < hi");
    std::vector<double> g(n);
    const double step = std::log(hi / lo) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) g[k] = lo * std::exp(step * static_cast<double>(k));
    g.front() = lo;
    g.back() = hi;
    return g;
}

inline constexpr std::size_t kDefaultDetectionGrid = 1001;
inline constexpr std::size_t kDefaultScaleGrid = 200;

struct RiskSpec {
    RiskKind risk_kind = RiskKind::fdr;
    std::optional<double> alpha;  // upr: derived from lambda = 1 when absent
    double delta = 0.1;
    std::vector<double> lambda_grid = linear_grid(kDefaultDetectionGrid);
    PredictionMode mode = PredictionMode::multilabel;
    TailBound bound = TailBound::hoeffding_bentkus;
    std::size_t workers = 1;

    void validate() const {
        if (lambda_grid.empty()) throw ConfigError("lambda grid is empty");
        for (std::size_t k = 1; k < lambda_grid.size(); ++k)
            if (!(lambda_grid[k] > lambda_grid[k - 1])) throw ConfigError("lambda grid must be strictly increasing");
        if (alpha && !(*alpha > 0.0 && *alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
        if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
        if (risk_kind != RiskKind::upr && !alpha) throw ConfigError("alpha is required for fdr/fpr");
    }
};

struct CurvePoint {
    double lambda = 0.0;
    double risk = 0.0;  // empirical risk
    double ucb = 0.0;   // monotone path only
};

struct PValue {
    double lambda = 0.0;
    double risk = 0.0;
    double p = 1.0;
};

struct CalibrationResult {
    Method method = Method::monotone_ucb;
    RiskKind risk_kind = RiskKind::fdr;
    double alpha = 0.0;
    double delta = 0.0;
    std::int64_t n = 0;
    TailBound bound = TailBound::hoeffding_bentkus;
    std::optional<double> lambda_hat;
    std::vector<CurvePoint> curve;       // monotone_ucb
    std::vector<PValue> p_values;        // ltt
    std::vector<double> accepted;        // ltt
    double threshold = 0.0;              // ltt per-test level delta / |grid|
    std::map<std::string, double> diagnostics;

    [[nodiscard]] nlohmann::json to_json() const {
        using nlohmann::json;
        json j;
        j["method"] = to_string(method);
        j["risk"] = to_string(risk_kind);
        j["alpha"] = alpha;
        j["delta"] = delta;
        j["n"] = n;
        j["bound"] = concentration::to_string(bound);
        j["lambda_hat"] = lambda_hat ? json(*lambda_hat) : json(nullptr);
        if (method == Method::monotone_ucb) {
            json c = json::array();
            for (const auto& p : curve) c.push_back({{"lambda", p.lambda}, {"risk", p.risk}, {"ucb", p.ucb}});
            j["ucb_curve"] = std::move(c);
        } else {
            json pv = json::array();
            for (const auto& p : p_values) pv.push_back({{"lambda", p.lambda}, {"risk", p.risk}, {"p", p.p}});
            j["p_values"] = std::move(pv);
            j["accepted"] = accepted;
            j["threshold"] = threshold;
        }
        j["diagnostics"] = diagnostics;
        return j;
    }
};

// ---------------------------------------------------------------------------
// Monotone path

// Index of the smallest grid lambda whose whole suffix has UCB <= alpha.
inline std::optional<std::size_t> select_monotone(std::span<const double> ucb_values, double alpha) {
    std::optional<std::size_t> best;
    for (std::size_t k = ucb_values.size(); k-- > 0;) {
        if (!(ucb_values[k] <= alpha)) break;
        best = k;
    }
    return best;
}

// UCB for every entry of `risks`. Evaluated once per distinct risk value:
// large-lambda tails of a risk curve are long runs of identical values.
inline std::vector<double> ucb_values(std::span<const double> risks, std::int64_t n, double delta, TailBound bound,
                                      std::size_t workers = 1) {
    std::vector<double> distinct(risks.begin(), risks.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> bounds(distinct.size());
    const concentration::BoundParams params{n, delta};
    parallel_for(distinct.size(), workers, [&](std::size_t k) {
        bounds[k] = concentration::ucb(std::clamp(distinct[k], 0.0, 1.0), params, bound);
    });
    std::vector<double> out(risks.size());
    for (std::size_t k = 0; k < risks.size(); ++k) {
        const auto it = std::lower_bound(distinct.begin(), distinct.end(), risks[k]);
        out[k] = bounds[static_cast<std::size_t>(it - distinct.begin())];
    }
    return out;
}

inline CalibrationResult monotone_from_risks(std::span<const double> grid, std::span<const double> risks,
                                             double alpha, double delta, std::int64_t n, TailBound bound,
                                             std::size_t workers = 1) {
    if (grid.size() != risks.size()) throw LengthMismatch("grid and risk curve differ in length");
    CalibrationResult out;
    out.method = Method::monotone_ucb;
    out.alpha = alpha;
    out.delta = delta;
    out.n = n;
    out.bound = bound;
    const auto ucbs = ucb_values(risks, n, delta, bound, workers);
    out.curve.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) out.curve.push_back({grid[k], risks[k], ucbs[k]});
    if (auto idx = select_monotone(ucbs, alpha)) out.lambda_hat = grid[*idx];
    return out;
}

// ---------------------------------------------------------------------------
// Learn Then Test

// Probability of at least one false rejection among m independent level-delta
// tests.
inline double fwer(double delta, std::size_t m) {
    return 1.0 - std::pow(1.0 - delta, static_cast<double>(m));
}

inline double bonferroni_level(double delta, std::size_t m) {
    if (m == 0) throw ConfigError("empty hypothesis family");
    return delta / static_cast<double>(m);
}

// Conservative p-value for H: R(lambda) > alpha given empirical risk r_hat.
inline double ltt_p_value(double r_hat, double alpha, std::int64_t n, TailBound bound) {
    return std::clamp(concentration::tail_bound(bound, std::clamp(r_hat, 0.0, 1.0), std::clamp(alpha, 0.0, 1.0), n),
                      0.0, 1.0);
}

// Accepts every lambda with p < delta / |grid| and picks the accepted lambda
// with the lowest p-value; ties go to the lambda nearest 1, then the larger.
inline CalibrationResult ltt_from_risks(std::span<const double> grid, std::span<const double> risks, double alpha,
                                        double delta, std::int64_t n, TailBound bound) {
    if (grid.size() != risks.size()) throw LengthMismatch("grid and risk curve differ in length");
    CalibrationResult out;
    out.method = Method::ltt;
    out.alpha = alpha;
    out.delta = delta;
    out.n = n;
    out.bound = bound;
    out.threshold = bonferroni_level(delta, grid.size());
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double p = ltt_p_value(risks[k], alpha, n, bound);
        out.p_values.push_back({grid[k], risks[k], p});
        if (!(p < out.threshold)) continue;
        out.accepted.push_back(grid[k]);
        if (!best) {
            best = k;
            continue;
        }
        const double pb = out.p_values[*best].p;
        const double dk = std::abs(grid[k] - 1.0), db = std::abs(grid[*best] - 1.0);
        if (p < pb || (p == pb && (dk < db || (dk == db && grid[k] > grid[*best])))) best = k;
    }
    if (best) out.lambda_hat = grid[*best];
    return out;
}

}  // namespace riskctl::calibration
