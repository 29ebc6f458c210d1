#pragma once

// Risk control for foil-word detection: per-instance set losses, empirical
// risk over a calibration set, the monotone UCB calibration of the threshold
// and the Learn-Then-Test alternative.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "riskctl/calibration.hpp"
#include "riskctl/errors.hpp"
#include "riskctl/intervals.hpp"
#include "riskctl/metrics.hpp"
#include "riskctl/parallel.hpp"
#include "riskctl/scoredata.hpp"
#include "riskctl/wordscore.hpp"

namespace riskctl::riskcal {

using calibration::CalibrationResult;
using calibration::RiskKind;
using calibration::RiskSpec;
using wordscore::PredictionMode;
using wordscore::PredictionSet;

inline double instance_loss(const PredictionSet& pred, std::span<const int> labels, std::span<const int> maskable,
                            RiskKind kind) {
    for (int j : labels)
        if (std::find(maskable.begin(), maskable.end(), j) == maskable.end())
            throw LabelError("instance '" + pred.instance_id + "': label " + std::to_string(j) + " is not maskable");
    switch (kind) {
        case RiskKind::fdr: return metrics::fdr_loss(pred.selected, labels);
        case RiskKind::fpr: return metrics::fpr_loss(pred.selected, labels, maskable);
        case RiskKind::upr: break;
    }
    throw ConfigError("instance_loss: upr is a dataset-level risk");
}

// Mean per-instance loss at one threshold (fdr/fpr), or the interval risk
// at one scale (upr).
inline double empirical_risk(const scoredata::Dataset& ds, double lambda, const RiskSpec& spec) {
    if (ds.instances.empty()) throw ConfigError("empty dataset");
    if (spec.risk_kind == RiskKind::upr) return intervals::upr_risk(ds, lambda);
    double total = 0.0;
    for (const auto& inst : ds.instances) {
        const auto& labels = inst.labels();
        const auto fv = wordscore::error_scores(inst);
        const auto pred = wordscore::predict(fv, lambda, spec.mode);
        total += instance_loss(pred, labels, inst.maskable_indices(), spec.risk_kind);
    }
    return total / static_cast<double>(ds.size());
}

// Scores and foil flags of one instance, laid out for repeated thresholding.
struct DetectionCase {
    std::vector<double> scores;
    std::vector<char> foil;
    std::size_t negatives = 0;
    int argmax = -1;  // position in `scores`, lowest word index on ties
};

inline DetectionCase make_case(const wordscore::ErrorScoreVector& fv, std::span<const int> labels) {
    DetectionCase c;
    for (int j : labels)
        if (fv.find(j) == nullptr)
            throw LabelError("instance '" + fv.instance_id + "': label " + std::to_string(j) + " is not maskable");
    for (const auto& e : fv.entries) {
        const bool is_foil = std::find(labels.begin(), labels.end(), e.word_index) != labels.end();
        c.scores.push_back(e.score);
        c.foil.push_back(is_foil ? 1 : 0);
        if (!is_foil) ++c.negatives;
        if (c.argmax < 0 || e.score > c.scores[static_cast<std::size_t>(c.argmax)])
            c.argmax = static_cast<int>(c.scores.size() - 1);
    }
    return c;
}

inline std::vector<DetectionCase> make_cases(const scoredata::Dataset& ds) {
    std::vector<DetectionCase> out;
    out.reserve(ds.size());
    for (const auto& inst : ds.instances) out.push_back(make_case(wordscore::error_scores(inst), inst.labels()));
    return out;
}

inline double case_loss(const DetectionCase& c, double lambda, RiskKind kind, PredictionMode mode) {
    std::size_t selected = 0, false_pos = 0;
    if (mode == PredictionMode::multiclass) {
        if (c.argmax >= 0 && c.scores[static_cast<std::size_t>(c.argmax)] > lambda) {
            selected = 1;
            false_pos = c.foil[static_cast<std::size_t>(c.argmax)] ? 0 : 1;
        }
    } else {
        for (std::size_t k = 0; k < c.scores.size(); ++k) {
            if (c.scores[k] > lambda) {
                ++selected;
                if (!c.foil[k]) ++false_pos;
            }
        }
    }
    if (kind == RiskKind::fdr) return selected == 0 ? 0.0 : static_cast<double>(false_pos) / static_cast<double>(selected);
    return c.negatives == 0 ? 0.0 : static_cast<double>(false_pos) / static_cast<double>(c.negatives);
}

inline double mean_loss(std::span<const DetectionCase> cases, double lambda, RiskKind kind, PredictionMode mode) {
    double total = 0.0;
    for (const auto& c : cases) total += case_loss(c, lambda, kind, mode);
    return total / static_cast<double>(cases.size());
}

// Empirical risk at every grid point. Each point sums its instances in index
// order, so the curve does not depend on the worker count.
inline std::vector<double> risk_curve(std::span<const DetectionCase> cases, std::span<const double> grid, RiskKind kind,
                                      PredictionMode mode, std::size_t workers = 1) {
    if (kind == RiskKind::upr) throw ConfigError("risk_curve: upr is computed by the interval path");
    if (cases.empty()) throw ConfigError("empty dataset");
    std::vector<double> out(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t k) { out[k] = mean_loss(cases, grid[k], kind, mode); });
    return out;
}

inline CalibrationResult calibrate_monotone_unchecked(std::span<const DetectionCase> cases, const RiskSpec& spec) {
    spec.validate();
    if (spec.risk_kind == RiskKind::upr) throw ConfigError("the monotone path needs a monotone risk (fdr or fpr)");
    const auto risks = risk_curve(cases, spec.lambda_grid, spec.risk_kind, spec.mode, spec.workers);
    auto result = calibration::monotone_from_risks(spec.lambda_grid, risks, *spec.alpha, spec.delta,
                                                   static_cast<std::int64_t>(cases.size()), spec.bound, spec.workers);
    result.risk_kind = spec.risk_kind;
    // Multilabel FDR can rise when a true foil leaves a set that still holds
    // clean words; the suffix rule then rests on the UCBs alone.
    double rises = 0.0;
    for (std::size_t k = 1; k < risks.size(); ++k)
        if (risks[k] > risks[k - 1]) rises += 1.0;
    result.diagnostics["nonmonotone_steps"] = rises;
    if (result.lambda_hat) result.diagnostics["risk_at_lambda_hat"] = mean_loss(cases, *result.lambda_hat, spec.risk_kind, spec.mode);
    return result;
}

inline CalibrationResult calibrate_monotone(std::span<const DetectionCase> cases, const RiskSpec& spec) {
    auto result = calibrate_monotone_unchecked(cases, spec);
    if (!result.lambda_hat)
        throw NoFeasibleLambda("UCB at the largest grid lambda is " + std::to_string(result.curve.back().ucb) +
                               " > alpha " + std::to_string(result.alpha));
    return result;
}

inline CalibrationResult calibrate_monotone(const scoredata::Dataset& ds, const RiskSpec& spec) {
    return calibrate_monotone(make_cases(ds), spec);
}

inline CalibrationResult ltt_calibrate_unchecked(const scoredata::Dataset& ds, const RiskSpec& spec) {
    spec.validate();
    if (spec.risk_kind == RiskKind::upr) return intervals::calibrate_intervals_unchecked(intervals::prepare_intervals(ds), spec);
    const auto cases = make_cases(ds);
    const auto risks = risk_curve(cases, spec.lambda_grid, spec.risk_kind, spec.mode, spec.workers);
    auto result = calibration::ltt_from_risks(spec.lambda_grid, risks, *spec.alpha, spec.delta,
                                              static_cast<std::int64_t>(cases.size()), spec.bound);
    result.risk_kind = spec.risk_kind;
    return result;
}

inline CalibrationResult ltt_calibrate(const scoredata::Dataset& ds, const RiskSpec& spec) {
    auto result = ltt_calibrate_unchecked(ds, spec);
    if (!result.lambda_hat)
        throw EmptyAcceptedSet("no lambda has p < " + std::to_string(result.threshold));
    return result;
}

}  // namespace riskctl::riskcal
