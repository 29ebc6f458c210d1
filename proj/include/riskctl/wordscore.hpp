#pragma once

// Per-word error scores from masked-caption score matrices, and the
// threshold prediction sets built on them.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "riskctl/errors.hpp"
#include "riskctl/scoredata.hpp"

namespace riskctl::wordscore {

enum class PredictionMode { multiclass, multilabel };

inline const char* to_string(PredictionMode m) {
    return m == PredictionMode::multiclass ? "multiclass" : "multilabel";
}

inline PredictionMode mode_from_string(const std::string& s) {
    if (s == "multiclass") return PredictionMode::multiclass;
    if (s == "multilabel") return PredictionMode::multilabel;
    throw ConfigError("unknown mode '" + s + "' (expected multiclass or multilabel)");
}

struct WordErrorScore {
    int word_index = 0;
    double raw = 0.0;       // V[j]
    double score = 0.5;     // f_v[j] = sigmoid(V[j])
    int evidence = 0;       // number of mask samples containing j
};

// Entries exist only for maskable words, in increasing word order.
struct ErrorScoreVector {
    std::string instance_id;
    std::vector<WordErrorScore> entries;

    [[nodiscard]] const WordErrorScore* find(int word_index) const {
        for (const auto& e : entries)
            if (e.word_index == word_index) return &e;
        return nullptr;
    }

    // Highest score, lowest word index on ties; nullptr when empty.
    [[nodiscard]] const WordErrorScore* argmax() const {
        const WordErrorScore* best = nullptr;
        for (const auto& e : entries)
            if (best == nullptr || e.score > best->score) best = &e;
        return best;
    }

    [[nodiscard]] double max_score() const {
        const auto* best = argmax();
        return best ? best->score : 0.0;
    }
};

struct PredictionSet {
    std::string instance_id;
    std::vector<int> selected;  // sorted word indices
    PredictionMode mode = PredictionMode::multilabel;
    double lambda_used = 0.0;
};

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Mean over image masks of (masked-caption score - full-caption score).
// Positive means removing the words raised the score, i.e. they hurt it.
inline double sample_contribution(std::span<const double> masked_scores, std::span<const double> base_scores) {
    if (masked_scores.size() != base_scores.size())
        throw LengthMismatch("mask sample has " + std::to_string(masked_scores.size()) + " scores, base has " +
                             std::to_string(base_scores.size()));
    if (base_scores.empty()) throw LengthMismatch("no image samples");
    double sum = 0.0;
    for (std::size_t i = 0; i < base_scores.size(); ++i) sum += masked_scores[i] - base_scores[i];
    return sum / static_cast<double>(base_scores.size());
}

inline double sample_contribution(const scoredata::MaskSample& sample, std::span<const double> base_scores) {
    return sample_contribution(std::span<const double>(sample.scores), base_scores);
}

inline ErrorScoreVector error_scores(const scoredata::ScoredInstance& inst) {
    const std::size_t n_words = inst.words.size();
    std::vector<double> sum(n_words, 0.0);
    std::vector<int> count(n_words, 0);
    for (const auto& sample : inst.mask_samples) {
        const double v = sample_contribution(sample, inst.base_scores);
        for (int j : sample.masked) {
            if (j < 0 || static_cast<std::size_t>(j) >= n_words)
                throw MissingEvidence("instance '" + inst.id + "': masked index out of range");
            sum[j] += v;
            ++count[j];
        }
    }
    ErrorScoreVector out;
    out.instance_id = inst.id;
    for (const auto& w : inst.words) {
        if (!w.maskable) continue;
        if (count[w.index] == 0)
            throw MissingEvidence("instance '" + inst.id + "': word " + std::to_string(w.index) + " never masked");
        const double raw = sum[w.index] / count[w.index];
        out.entries.push_back({w.index, raw, sigmoid(raw), count[w.index]});
    }
    return out;
}

// Words whose score is strictly above lambda. Multiclass keeps at most the
// argmax.
inline PredictionSet predict(const ErrorScoreVector& fv, double lambda, PredictionMode mode) {
    PredictionSet out;
    out.instance_id = fv.instance_id;
    out.mode = mode;
    out.lambda_used = lambda;
    if (mode == PredictionMode::multiclass) {
        if (const auto* best = fv.argmax(); best != nullptr && best->score > lambda)
            out.selected.push_back(best->word_index);
    } else {
        for (const auto& e : fv.entries)
            if (e.score > lambda) out.selected.push_back(e.word_index);
    }
    return out;
}

inline std::vector<ErrorScoreVector> error_scores(const scoredata::Dataset& ds) {
    std::vector<ErrorScoreVector> out;
    out.reserve(ds.size());
    for (const auto& inst : ds.instances) out.push_back(error_scores(inst));
    return out;
}

}  // namespace riskctl::wordscore
