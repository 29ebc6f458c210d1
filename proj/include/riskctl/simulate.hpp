#pragma once

// Synthetic datasets with known ground truth and Monte-Carlo validation of
// the calibration guarantee P(R(lambda_hat) <= alpha) >= 1 - delta.
//
// Detection data: each caption is a determiner followed by L maskable words.
// Every word j gets a raw error score V[j] ~ N(+sep, noise) if it is a foil
// and N(-sep, noise) otherwise, clamped to [-1.25, 1.25] so that all scores
// stay inside [0, 2.5]. With single-word masks, one image sample and a base
// score of 1.25, mask sample j scores 1.25 + V[j], so the error-score
// aggregation recovers V exactly. The multi-word mode masks random word
// subsets against several image samples instead.
//
// Interval data: a model centre c ~ U[0, 2.5] and a spread s ~ median *
// exp(log_sd * N(0, 1)) per instance. Masked scores are N(c, s) clipped to
// [0, 2.5]; the human score is drawn from N(c, (k s)^2) truncated to
// [0, 2.5], k being interval_noise_scale. The sample spread therefore
// understates the true error scale by the factor k.
//
// All randomness comes from CounterRng streams keyed by (seed, trial, split,
// instance), so output does not depend on worker count or generation order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "riskctl/calibration.hpp"
#include "riskctl/errors.hpp"
#include "riskctl/intervals.hpp"
#include "riskctl/parallel.hpp"
#include "riskctl/riskcal.hpp"
#include "riskctl/rng.hpp"
#include "riskctl/scoredata.hpp"

namespace riskctl::simulate {

using scoredata::Dataset;
using scoredata::ScoredInstance;

struct SynthConfig {
    std::size_t n_cal = 500;
    std::size_t n_test = 0;  // 0 = 20 * n_cal
    std::size_t n_trials = 200;
    std::size_t words_per_caption = 8;
    std::size_t foils_min = 0;
    std::size_t foils_max = 2;
    double separation = 1.0;
    double noise = 0.5;
    std::uint64_t seed = 0;
    wordscore::PredictionMode mode = wordscore::PredictionMode::multilabel;
    bool multiword_masks = false;
    std::size_t multiword_images = 3;
    // interval data
    double interval_noise_scale = 1.0;
    double spread_median = 0.3;
    double spread_log_sd = 0.5;
    std::size_t image_samples = 10;
    std::size_t text_samples = 10;

    [[nodiscard]] std::size_t test_size() const { return n_test > 0 ? n_test : 20 * n_cal; }

    void validate() const {
        if (n_cal < 1 || n_trials < 1 || words_per_caption < 1) throw ConfigError("counts must be >= 1");
        if (!(noise > 0.0)) throw ConfigError("noise must be > 0");
        if (foils_min > foils_max || foils_max > words_per_caption)
            throw ConfigError("need foils_min <= foils_max <= words_per_caption");
        if (!(interval_noise_scale >= 0.0)) throw ConfigError("interval_noise_scale must be >= 0");
        if (!(spread_median >= 0.0) || !(spread_log_sd >= 0.0)) throw ConfigError("spread parameters must be >= 0");
        if (image_samples < 1 || text_samples < 1 || multiword_images < 1) throw ConfigError("sample counts must be >= 1");
        if (image_samples * text_samples < 2) throw ConfigError("need at least 2 scores per instance");
    }
};

enum class SplitTag : std::uint64_t { calibration = 1, test = 2 };

inline constexpr double kBaseScore = 1.25;
inline constexpr double kRawLimit = 1.25;

struct DetectionDraw {
    ScoredInstance instance;
    std::vector<double> raw;  // generating V for each maskable word, in word order
};

namespace detail {

inline constexpr const char* kPosCycle[] = {"NOUN", "VERB", "ADJ", "NOUN", "ADV", "PROPN", "NUM", "NOUN"};

inline double uniform01(CounterRng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
inline double gaussian(CounterRng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline std::vector<scoredata::WordToken> caption_words(std::size_t maskable) {
    std::vector<scoredata::WordToken> words;
    words.push_back({0, "a", "DET", false});
    for (std::size_t k = 0; k < maskable; ++k) {
        const char* pos = kPosCycle[k % std::size(kPosCycle)];
        words.push_back({static_cast<int>(k + 1), "w" + std::to_string(k + 1), pos, true});
    }
    return words;
}

inline std::string instance_id(SplitTag split, std::size_t trial, std::size_t index) {
    return std::string(split == SplitTag::calibration ? "cal" : "test") + "-" + std::to_string(trial) + "-" +
           std::to_string(index);
}

}  // namespace detail

inline DetectionDraw draw_detection_instance(const SynthConfig& cfg, std::size_t trial, SplitTag split,
                                             std::size_t index) {
    CounterRng rng(cfg.seed, {static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(split), index});
    const std::size_t L = cfg.words_per_caption;

    DetectionDraw out;
    auto& inst = out.instance;
    inst.id = detail::instance_id(split, trial, index);
    inst.words = detail::caption_words(L);

    const std::size_t k = std::uniform_int_distribution<std::size_t>(cfg.foils_min, cfg.foils_max)(rng);
    std::vector<int> positions(L);
    for (std::size_t j = 0; j < L; ++j) positions[j] = static_cast<int>(j + 1);
    for (std::size_t j = 0; j < k; ++j)  // partial Fisher-Yates
        std::swap(positions[j], positions[std::uniform_int_distribution<std::size_t>(j, L - 1)(rng)]);
    std::vector<int> foils(positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(foils.begin(), foils.end());
    inst.foil_labels = foils;

    const double limit = cfg.multiword_masks ? 0.6 : kRawLimit;
    out.raw.resize(L);
    for (std::size_t j = 0; j < L; ++j) {
        const bool foil = std::binary_search(foils.begin(), foils.end(), static_cast<int>(j + 1));
        const double centre = foil ? cfg.separation : -cfg.separation;
        out.raw[j] = std::clamp(centre + cfg.noise * detail::gaussian(rng), -limit, limit);
    }

    if (!cfg.multiword_masks) {
        inst.base_scores = {kBaseScore};
        for (std::size_t j = 0; j < L; ++j)
            inst.mask_samples.push_back({{static_cast<int>(j + 1)}, {kBaseScore + out.raw[j]}});
        return out;
    }

    const std::size_t images = cfg.multiword_images;
    for (std::size_t i = 0; i < images; ++i) inst.base_scores.push_back(0.8 + 0.9 * detail::uniform01(rng));
    auto add_sample = [&](std::vector<int> masked) {
        std::sort(masked.begin(), masked.end());
        double shift = 0.0;
        for (int j : masked) shift += out.raw[static_cast<std::size_t>(j - 1)];
        shift /= static_cast<double>(masked.size());
        scoredata::MaskSample s;
        s.masked = std::move(masked);
        for (std::size_t i = 0; i < images; ++i)
            s.scores.push_back(std::clamp(inst.base_scores[i] + shift + 0.05 * detail::gaussian(rng),
                                          scoredata::kScoreMin, scoredata::kScoreMax));
        inst.mask_samples.push_back(std::move(s));
    };
    for (std::size_t j = 0; j < L; ++j) add_sample({static_cast<int>(j + 1)});
    for (std::size_t t = 0; t < L && L >= 2; ++t) {
        const std::size_t size = std::uniform_int_distribution<std::size_t>(2, std::min<std::size_t>(3, L))(rng);
        std::vector<int> pick(L);
        for (std::size_t j = 0; j < L; ++j) pick[j] = static_cast<int>(j + 1);
        for (std::size_t j = 0; j < size; ++j)
            std::swap(pick[j], pick[std::uniform_int_distribution<std::size_t>(j, L - 1)(rng)]);
        pick.resize(size);
        add_sample(std::move(pick));
    }
    return out;
}

inline Dataset generate_detection_split(const SynthConfig& cfg, std::size_t trial, SplitTag split, std::size_t count) {
    cfg.validate();
    Dataset ds;
    ds.split = split == SplitTag::calibration ? scoredata::Split::calibration : scoredata::Split::test;
    ds.instances.reserve(count);
    for (std::size_t i = 0; i < count; ++i) ds.instances.push_back(draw_detection_instance(cfg, trial, split, i).instance);
    return ds;
}

inline std::pair<Dataset, Dataset> generate_detection(const SynthConfig& cfg, std::size_t trial = 0) {
    cfg.validate();
    return {generate_detection_split(cfg, trial, SplitTag::calibration, cfg.n_cal),
            generate_detection_split(cfg, trial, SplitTag::test, cfg.test_size())};
}

// ---------------------------------------------------------------------------
// Interval data

inline ScoredInstance draw_interval_instance(const SynthConfig& cfg, std::size_t trial, SplitTag split,
                                             std::size_t index) {
    CounterRng rng(cfg.seed, {static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(split), index});
    constexpr double lo = scoredata::kScoreMin, hi = scoredata::kScoreMax;
    const double centre = hi * detail::uniform01(rng);
    const double spread = cfg.spread_median * std::exp(cfg.spread_log_sd * detail::gaussian(rng));

    const double err_scale = cfg.interval_noise_scale * spread;
    double human = centre;
    if (err_scale > 0.0) {
        for (int attempt = 0;; ++attempt) {
            if (attempt == 1000000) throw NumericalError("truncated draw did not terminate");
            const double y = centre + err_scale * detail::gaussian(rng);
            if (y >= lo && y <= hi) {
                human = y;
                break;
            }
        }
    }

    ScoredInstance inst;
    inst.id = detail::instance_id(split, trial, index);
    inst.words = detail::caption_words(3);
    auto observe = [&] { return std::clamp(centre + spread * detail::gaussian(rng), lo, hi); };
    for (std::size_t i = 0; i < cfg.image_samples; ++i) inst.base_scores.push_back(observe());
    for (std::size_t t = 0; t < cfg.text_samples; ++t) {
        scoredata::MaskSample s;
        s.masked = {static_cast<int>(t % 3 + 1)};
        for (std::size_t i = 0; i < cfg.image_samples; ++i) s.scores.push_back(observe());
        inst.mask_samples.push_back(std::move(s));
    }
    inst.human_score = human;
    inst.full_score = std::clamp(centre, lo, hi);
    return inst;
}

inline Dataset generate_interval_split(const SynthConfig& cfg, std::size_t trial, SplitTag split, std::size_t count) {
    cfg.validate();
    Dataset ds;
    ds.split = split == SplitTag::calibration ? scoredata::Split::calibration : scoredata::Split::test;
    ds.instances.reserve(count);
    for (std::size_t i = 0; i < count; ++i) ds.instances.push_back(draw_interval_instance(cfg, trial, split, i));
    return ds;
}

inline std::pair<Dataset, Dataset> generate_interval(const SynthConfig& cfg, std::size_t trial = 0) {
    cfg.validate();
    return {generate_interval_split(cfg, trial, SplitTag::calibration, cfg.n_cal),
            generate_interval_split(cfg, trial, SplitTag::test, cfg.test_size())};
}

// ---------------------------------------------------------------------------
// Guarantee validation

struct TrialRecord {
    std::size_t trial = 0;
    std::optional<double> lambda_hat;
    double alpha = 0.0;
    double cal_risk = std::numeric_limits<double>::quiet_NaN();
    double test_risk = std::numeric_limits<double>::quiet_NaN();
    bool violated = false;
    std::string error;
};

struct GuaranteeReport {
    std::size_t violations = 0;
    std::size_t trials = 0;
    std::size_t failed_trials = 0;  // calibration raised; not counted as violations
    double violation_rate = 0.0;
    double target_delta = 0.0;
    double alpha = 0.0;             // fdr/fpr tolerance; mean step-1 alpha for upr
    double mean_test_risk = 0.0;
    double mean_cal_risk = 0.0;
    double mean_lambda_hat = 0.0;
    std::vector<TrialRecord> records;

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"violations", violations},         {"trials", trials},
                {"failed_trials", failed_trials},   {"violation_rate", violation_rate},
                {"target_delta", target_delta},     {"alpha", alpha},
                {"mean_test_risk", mean_test_risk}, {"mean_cal_risk", mean_cal_risk},
                {"mean_lambda_hat", mean_lambda_hat}};
    }

    void write_csv(std::ostream& out) const {
        out << "trial,lambda_hat,alpha,cal_risk,test_risk,violated,error\n";
        char buf[256];
        for (const auto& r : records) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%d,", r.trial,
                          r.lambda_hat.value_or(std::nan("")), r.alpha, r.cal_risk, r.test_risk, r.violated ? 1 : 0);
            out << buf << '"' << r.error << '"' << '\n';
        }
    }
};

inline TrialRecord run_detection_trial(const SynthConfig& cfg, calibration::RiskSpec spec, std::size_t trial) {
    TrialRecord rec;
    rec.trial = trial;
    rec.alpha = *spec.alpha;
    spec.workers = 1;
    const auto cal = riskcal::make_cases(generate_detection_split(cfg, trial, SplitTag::calibration, cfg.n_cal));
    try {
        const auto result = riskcal::calibrate_monotone(cal, spec);
        rec.lambda_hat = result.lambda_hat;
    } catch (const NoFeasibleLambda& e) {
        rec.error = e.what();
        return rec;
    }
    const auto test = riskcal::make_cases(generate_detection_split(cfg, trial, SplitTag::test, cfg.test_size()));
    rec.cal_risk = riskcal::mean_loss(cal, *rec.lambda_hat, spec.risk_kind, spec.mode);
    rec.test_risk = riskcal::mean_loss(test, *rec.lambda_hat, spec.risk_kind, spec.mode);
    rec.violated = rec.test_risk > rec.alpha;
    return rec;
}

inline TrialRecord run_interval_trial(const SynthConfig& cfg, calibration::RiskSpec spec, std::size_t trial) {
    TrialRecord rec;
    rec.trial = trial;
    spec.workers = 1;
    const auto cal = intervals::prepare_intervals(generate_interval_split(cfg, trial, SplitTag::calibration, cfg.n_cal));
    const auto result = intervals::calibrate_intervals_unchecked(cal, spec);
    rec.alpha = result.alpha;
    if (!result.lambda_hat) {
        rec.error = "EmptyAcceptedSet";
        return rec;
    }
    rec.lambda_hat = result.lambda_hat;
    const auto test = intervals::prepare_intervals(generate_interval_split(cfg, trial, SplitTag::test, cfg.test_size()));
    rec.cal_risk = intervals::upr_risk(cal, *rec.lambda_hat);
    rec.test_risk = intervals::upr_risk(test, *rec.lambda_hat);
    rec.violated = rec.test_risk > rec.alpha;
    return rec;
}

// Runs cfg.n_trials independent calibrations, each on a fresh calibration
// set, and measures the risk at lambda_hat on a fresh test pool.
inline GuaranteeReport validate_guarantee(const SynthConfig& cfg, const calibration::RiskSpec& spec) {
    cfg.validate();
    spec.validate();
    GuaranteeReport report;
    report.trials = cfg.n_trials;
    report.target_delta = spec.delta;
    report.records.resize(cfg.n_trials);
    parallel_for(cfg.n_trials, spec.workers, [&](std::size_t t) {
        report.records[t] = spec.risk_kind == calibration::RiskKind::upr ? run_interval_trial(cfg, spec, t)
                                                                        : run_detection_trial(cfg, spec, t);
    });

    std::size_t ok = 0;
    double alpha_sum = 0.0;
    for (const auto& r : report.records) {
        alpha_sum += r.alpha;
        if (!r.lambda_hat) {
            ++report.failed_trials;
            continue;
        }
        ++ok;
        if (r.violated) ++report.violations;
        report.mean_test_risk += r.test_risk;
        report.mean_cal_risk += r.cal_risk;
        report.mean_lambda_hat += *r.lambda_hat;
    }
    report.alpha = spec.alpha ? *spec.alpha : alpha_sum / static_cast<double>(cfg.n_trials);
    if (ok > 0) {
        report.mean_test_risk /= static_cast<double>(ok);
        report.mean_cal_risk /= static_cast<double>(ok);
        report.mean_lambda_hat /= static_cast<double>(ok);
    }
    report.violation_rate = static_cast<double>(report.violations) / static_cast<double>(report.trials);
    return report;
}

}  // namespace riskctl::simulate
