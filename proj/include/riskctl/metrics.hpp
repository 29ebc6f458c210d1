#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "riskctl/errors.hpp"
#include "riskctl/wordscore.hpp"

namespace riskctl::metrics {

using wordscore::ErrorScoreVector;
using wordscore::PredictionSet;

struct Counts {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct PRF {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

inline PRF prf_from_counts(const Counts& c) {
    PRF out;
    if (c.tp + c.fp > 0) out.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) out.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (out.precision + out.recall > 0) out.f1 = 2 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

struct MetricReport {
    std::map<std::string, double> values;
    Counts counts;
    std::size_t n_instances = 0;

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j;
        j["metrics"] = values;
        j["counts"] = {{"tp", counts.tp}, {"fp", counts.fp}, {"fn", counts.fn}, {"tn", counts.tn}};
        j["n_instances"] = n_instances;
        return j;
    }
};

// ---------------------------------------------------------------------------
// Set losses

// |selected \ labels| / |selected|, 0 for an empty selection.
inline double fdr_loss(std::span<const int> selected, std::span<const int> labels) {
    if (selected.empty()) return 0.0;
    std::size_t fp = 0;
    for (int j : selected)
        if (std::find(labels.begin(), labels.end(), j) == labels.end()) ++fp;
    return static_cast<double>(fp) / static_cast<double>(selected.size());
}

// |selected \ labels| / |maskable \ labels|, 0 when there are no negatives.
inline double fpr_loss(std::span<const int> selected, std::span<const int> labels, std::span<const int> maskable) {
    std::size_t negatives = 0;
    for (int j : maskable)
        if (std::find(labels.begin(), labels.end(), j) == labels.end()) ++negatives;
    if (negatives == 0) return 0.0;
    std::size_t fp = 0;
    for (int j : selected)
        if (std::find(labels.begin(), labels.end(), j) == labels.end()) ++fp;
    return static_cast<double>(fp) / static_cast<double>(negatives);
}

// ---------------------------------------------------------------------------
// Detection metrics

// Micro-averaged over all words. TN is counted only when maskable sets are
// supplied.
inline Counts word_counts(std::span<const PredictionSet> preds, std::span<const std::vector<int>> labels,
                          std::span<const std::vector<int>> maskable = {}) {
    if (preds.size() != labels.size())
        throw AlignmentError(std::to_string(preds.size()) + " prediction sets vs " + std::to_string(labels.size()) +
                             " label sets");
    if (!maskable.empty() && maskable.size() != preds.size()) throw AlignmentError("maskable sets misaligned");
    Counts c;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        const auto& sel = preds[k].selected;
        const auto& lab = labels[k];
        std::int64_t tp = 0;
        for (int j : sel)
            if (std::find(lab.begin(), lab.end(), j) != lab.end()) ++tp;
        c.tp += tp;
        c.fp += static_cast<std::int64_t>(sel.size()) - tp;
        c.fn += static_cast<std::int64_t>(lab.size()) - tp;
        if (!maskable.empty()) {
            for (int j : maskable[k])
                if (std::find(sel.begin(), sel.end(), j) == sel.end() &&
                    std::find(lab.begin(), lab.end(), j) == lab.end())
                    ++c.tn;
        }
    }
    return c;
}

inline PRF word_prf(std::span<const PredictionSet> preds, std::span<const std::vector<int>> labels) {
    return prf_from_counts(word_counts(preds, labels));
}

// Caption-level: flagged iff the prediction set is non-empty, positive iff
// the caption carries at least one foil.
inline PRF instance_prf(std::span<const PredictionSet> preds, std::span<const std::vector<int>> labels) {
    if (preds.size() != labels.size()) throw AlignmentError("prediction and label counts differ");
    Counts c;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        const bool flagged = !preds[k].selected.empty();
        const bool foil = !labels[k].empty();
        if (flagged && foil) ++c.tp;
        else if (flagged) ++c.fp;
        else if (foil) ++c.fn;
        else ++c.tn;
    }
    return prf_from_counts(c);
}

// Sum over distinct score thresholds (descending) of (R_n - R_{n-1}) P_n.
// Equal scores form one threshold.
inline double average_precision(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw LengthMismatch("scores and labels differ in length");
    const auto positives = std::count_if(labels.begin(), labels.end(), [](int l) { return l != 0; });
    if (positives == 0) throw NoPositives("average precision needs at least one positive label");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0, prev_recall = 0.0;
    std::int64_t tp = 0, fp = 0;
    for (std::size_t k = 0; k < order.size();) {
        const double s = scores[order[k]];
        for (; k < order.size() && scores[order[k]] == s; ++k) (labels[order[k]] != 0 ? tp : fp)++;
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

enum class LocationVariant { top1, set };

// Fraction of foil-bearing captions where the foil is found: by the argmax
// of f_v (top1) or by any member of the prediction set (set).
inline double location_accuracy(std::span<const PredictionSet> preds, std::span<const ErrorScoreVector> fvs,
                                std::span<const std::vector<int>> labels, LocationVariant variant) {
    if (labels.size() != preds.size() || labels.size() != fvs.size())
        throw AlignmentError("predictions, error scores and labels differ in length");
    std::size_t eligible = 0, hits = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        const auto& lab = labels[k];
        if (lab.empty()) continue;
        ++eligible;
        auto in_labels = [&](int j) { return std::find(lab.begin(), lab.end(), j) != lab.end(); };
        if (variant == LocationVariant::top1) {
            const auto* best = fvs[k].argmax();
            if (best != nullptr && in_labels(best->word_index)) ++hits;
        } else {
            if (std::any_of(preds[k].selected.begin(), preds[k].selected.end(), in_labels)) ++hits;
        }
    }
    if (eligible == 0) throw NoFoilInstances("no instance carries a foil label");
    return static_cast<double>(hits) / static_cast<double>(eligible);
}

// ---------------------------------------------------------------------------
// Correlations

inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw LengthMismatch("pearson: inputs differ in length");
    if (x.size() < 2) throw ZeroVariance("pearson: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ZeroVariance("pearson: constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace detail {

// Counts strict inversions of v while merge-sorting it.
inline std::int64_t count_inversions(std::vector<double>& v) {
    std::vector<double> buf(v.size());
    std::int64_t inv = 0;
    for (std::size_t width = 1; width < v.size(); width *= 2) {
        for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
            const std::size_t mid = std::min(lo + width, v.size()), hi = std::min(lo + 2 * width, v.size());
            std::size_t a = lo, b = mid, out = lo;
            while (a < mid && b < hi) {
                if (v[a] <= v[b]) {
                    buf[out++] = v[a++];
                } else {
                    inv += static_cast<std::int64_t>(mid - a);
                    buf[out++] = v[b++];
                }
            }
            while (a < mid) buf[out++] = v[a++];
            while (b < hi) buf[out++] = v[b++];
        }
        v.swap(buf);
    }
    return inv;
}

inline std::int64_t tied_pairs(const std::vector<double>& sorted) {
    std::int64_t pairs = 0;
    for (std::size_t k = 0; k < sorted.size();) {
        std::size_t e = k;
        while (e < sorted.size() && sorted[e] == sorted[k]) ++e;
        const auto t = static_cast<std::int64_t>(e - k);
        pairs += t * (t - 1) / 2;
        k = e;
    }
    return pairs;
}

}  // namespace detail

// tau_c = ((n_c - n_d) / n_0) * ((n - 1) / n) * (m / (m - 1)), where m is
// the number of distinct reference values and tied pairs count as neither
// concordant nor discordant. n_c - n_d is obtained in O(n log n) by sorting
// on (pred, ref) and counting inversions of ref.
inline double kendall_tau_c(std::span<const double> preds, std::span<const double> refs) {
    if (preds.size() != refs.size()) throw LengthMismatch("kendall_tau_c: inputs differ in length");
    const std::size_t n = preds.size();
    if (n < 2) throw DegenerateScale("kendall_tau_c: need at least 2 observations");
    const std::size_t m = std::set<double>(refs.begin(), refs.end()).size();
    if (m < 2) throw DegenerateScale("kendall_tau_c: reference ratings take a single value");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return preds[a] != preds[b] ? preds[a] < preds[b] : refs[a] < refs[b];
    });

    std::int64_t tied_x = 0, tied_xy = 0;
    for (std::size_t k = 0; k < n;) {
        std::size_t e = k;
        while (e < n && preds[order[e]] == preds[order[k]]) ++e;
        const auto t = static_cast<std::int64_t>(e - k);
        tied_x += t * (t - 1) / 2;
        for (std::size_t a = k; a < e;) {
            std::size_t b = a;
            while (b < e && refs[order[b]] == refs[order[a]]) ++b;
            const auto u = static_cast<std::int64_t>(b - a);
            tied_xy += u * (u - 1) / 2;
            a = b;
        }
        k = e;
    }

    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = refs[order[k]];
    const std::int64_t discordant = detail::count_inversions(y);  // y now sorted
    const std::int64_t tied_y = detail::tied_pairs(y);

    const auto nn = static_cast<std::int64_t>(n);
    const std::int64_t n0 = nn * (nn - 1) / 2;
    const std::int64_t untied = n0 - tied_x - tied_y + tied_xy;
    const std::int64_t diff = untied - 2 * discordant;

    const double md = static_cast<double>(m);
    return (static_cast<double>(diff) / static_cast<double>(n0)) * (static_cast<double>(nn - 1) / static_cast<double>(nn)) *
           (md / (md - 1.0));
}

}  // namespace riskctl::metrics
