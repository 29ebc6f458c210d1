#pragma once

// Score-distribution data model and its JSON Lines file format.
//
// One line per image-caption pair:
//
//   {"base_scores":[...], "foil_labels":[...], "full_score":x, "human_score":y,
//    "id":"...", "mask_samples":[{"masked":[j,...],"scores":[...]}, ...],
//    "words":[{"index":0,"pos":"NOUN","surface":"dog"}, ...]}
//
// base_scores[i] is the score of the unmasked caption against image mask i;
// mask_samples[t].scores[i] the score of text mask t against image mask i.
// foil_labels, human_score and full_score are optional.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "riskctl/errors.hpp"

namespace riskctl::scoredata {

inline constexpr double kScoreMin = 0.0;
inline constexpr double kScoreMax = 2.5;  // CLIPScore rescaling weight w

inline constexpr std::array<std::string_view, 6> kMaskablePos = {
    "NOUN", "PROPN", "NUM", "VERB", "ADJ", "ADV"};

inline bool is_maskable_pos(std::string_view pos) {
    return std::find(kMaskablePos.begin(), kMaskablePos.end(), pos) != kMaskablePos.end();
}

struct WordToken {
    int index = 0;
    std::string surface;
    std::string pos;
    bool maskable = false;
};

struct MaskSample {
    std::vector<int> masked;      // sorted, unique word indices
    std::vector<double> scores;   // one per image mask
};

struct ScoredInstance {
    std::string id;
    std::vector<WordToken> words;
    std::vector<double> base_scores;
    std::vector<MaskSample> mask_samples;
    std::optional<std::vector<int>> foil_labels;
    std::optional<double> human_score;
    std::optional<double> full_score;

    [[nodiscard]] std::size_t image_samples() const { return base_scores.size(); }
    [[nodiscard]] std::size_t text_samples() const { return mask_samples.size(); }

    [[nodiscard]] std::vector<int> maskable_indices() const {
        std::vector<int> out;
        for (const auto& w : words)
            if (w.maskable) out.push_back(w.index);
        return out;
    }

    [[nodiscard]] const std::vector<int>& labels() const {
        if (!foil_labels) throw MissingLabelError("instance '" + id + "' has no foil_labels");
        return *foil_labels;
    }

    [[nodiscard]] double human() const {
        if (!human_score) throw MissingLabelError("instance '" + id + "' has no human_score");
        return *human_score;
    }
};

enum class Split { calibration, test };
enum class DataKind { detection, interval };

struct Dataset {
    std::vector<ScoredInstance> instances;
    Split split = Split::calibration;

    [[nodiscard]] std::size_t size() const { return instances.size(); }
};

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline void check_score(double v, const std::string& id, const std::string& where) {
    if (!std::isfinite(v) || v < kScoreMin || v > kScoreMax) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "instance '" << id << "' " << where << ": score " << v
            << " outside [" << kScoreMin << ", " << kScoreMax << "]";
        throw RangeError(msg.str());
    }
}

}  // namespace detail

// Checks every typed invariant of a single instance. Throws on the first
// violation.
inline void validate_instance(const ScoredInstance& inst, DataKind kind) {
    const std::string& id = inst.id;
    if (id.empty()) throw SchemaError("instance id must be a non-empty string");

    for (std::size_t k = 0; k < inst.words.size(); ++k) {
        if (inst.words[k].index != static_cast<int>(k))
            throw SchemaError("instance '" + id + "': word indices must be contiguous from 0, found " +
                              std::to_string(inst.words[k].index) + " at position " + std::to_string(k));
        if (inst.words[k].maskable != is_maskable_pos(inst.words[k].pos))
            throw SchemaError("instance '" + id + "': maskable flag disagrees with POS tag");
    }

    const std::size_t n_images = inst.base_scores.size();
    if (n_images == 0) throw SchemaError("instance '" + id + "': base_scores must be non-empty");
    for (std::size_t i = 0; i < n_images; ++i)
        detail::check_score(inst.base_scores[i], id, "base_scores[" + std::to_string(i) + "]");

    std::vector<char> covered(inst.words.size(), 0);
    for (std::size_t t = 0; t < inst.mask_samples.size(); ++t) {
        const auto& s = inst.mask_samples[t];
        const std::string where = "mask_samples[" + std::to_string(t) + "]";
        if (s.masked.empty()) throw SchemaError("instance '" + id + "' " + where + ": masked set is empty");
        for (std::size_t k = 0; k < s.masked.size(); ++k) {
            const int j = s.masked[k];
            if (j < 0 || j >= static_cast<int>(inst.words.size()))
                throw SchemaError("instance '" + id + "' " + where + ": word index " + std::to_string(j) +
                                  " out of range");
            if (!inst.words[j].maskable)
                throw SchemaError("instance '" + id + "' " + where + ": word " + std::to_string(j) +
                                  " (" + inst.words[j].pos + ") is not maskable");
            if (k > 0 && s.masked[k - 1] >= j)
                throw SchemaError("instance '" + id + "' " + where + ": masked indices must be sorted and unique");
            covered[j] = 1;
        }
        if (s.scores.size() != n_images)
            throw SchemaError("instance '" + id + "' " + where + ": expected " + std::to_string(n_images) +
                              " scores, found " + std::to_string(s.scores.size()));
        for (std::size_t i = 0; i < n_images; ++i)
            detail::check_score(s.scores[i], id, where + ".scores[" + std::to_string(i) + "]");
    }

    for (const auto& w : inst.words)
        if (w.maskable && !covered[w.index])
            throw CoverageError("instance '" + id + "': maskable word " + std::to_string(w.index) + " ('" +
                                w.surface + "') appears in no mask sample");

    if (inst.foil_labels) {
        std::vector<int> sorted = *inst.foil_labels;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw SchemaError("instance '" + id + "': duplicate foil label");
        for (int j : sorted)
            if (j < 0 || j >= static_cast<int>(inst.words.size()) || !inst.words[j].maskable)
                throw SchemaError("instance '" + id + "': foil label " + std::to_string(j) +
                                  " is not a maskable word");
    }
    if (inst.human_score && !std::isfinite(*inst.human_score))
        throw SchemaError("instance '" + id + "': human_score must be finite");
    if (inst.full_score) detail::check_score(*inst.full_score, id, "full_score");

    if (kind == DataKind::interval && inst.mask_samples.empty())
        throw SchemaError("instance '" + id + "': interval data needs at least one mask sample");
}

inline void validate_dataset(const Dataset& ds, DataKind kind) {
    if (ds.instances.empty()) throw SchemaError("dataset is empty");
    std::unordered_set<std::string> seen;
    for (const auto& inst : ds.instances) {
        validate_instance(inst, kind);
        if (!seen.insert(inst.id).second) throw DuplicateIdError("instance id '" + inst.id + "' repeated");
    }
}

// ---------------------------------------------------------------------------
// JSON (de)serialization

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& ctx) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(ctx + ": missing field '" + key + "'");
    return *it;
}

inline double as_number(const json& v, const std::string& ctx) {
    if (!v.is_number()) throw SchemaError(ctx + ": expected a number");
    return v.get<double>();
}

inline int as_index(const json& v, const std::string& ctx) {
    if (!v.is_number_integer()) throw SchemaError(ctx + ": expected an integer");
    return v.get<int>();
}

inline std::vector<double> as_numbers(const json& v, const std::string& ctx) {
    if (!v.is_array()) throw SchemaError(ctx + ": expected an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(as_number(v[k], ctx + "[" + std::to_string(k) + "]"));
    return out;
}

inline std::vector<int> as_indices(const json& v, const std::string& ctx) {
    if (!v.is_array()) throw SchemaError(ctx + ": expected an array");
    std::vector<int> out;
    out.reserve(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(as_index(v[k], ctx + "[" + std::to_string(k) + "]"));
    return out;
}

inline std::optional<double> optional_number(const json& obj, const char* key, const std::string& ctx) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    return as_number(*it, ctx + "." + key);
}

}  // namespace detail

// Nearest double to the value printed with 9 significant digits. Idempotent.
inline double canonical_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

inline ScoredInstance instance_from_json(const nlohmann::json& j, const std::string& ctx) {
    using namespace detail;
    if (!j.is_object()) throw SchemaError(ctx + ": expected a JSON object");
    ScoredInstance inst;
    const auto& id = require(j, "id", ctx);
    if (!id.is_string()) throw SchemaError(ctx + ".id: expected a string");
    inst.id = id.get<std::string>();
    const std::string ictx = ctx + " ('" + inst.id + "')";

    const auto& words = require(j, "words", ictx);
    if (!words.is_array()) throw SchemaError(ictx + ".words: expected an array");
    for (std::size_t k = 0; k < words.size(); ++k) {
        const std::string wctx = ictx + ".words[" + std::to_string(k) + "]";
        const auto& w = words[k];
        if (!w.is_object()) throw SchemaError(wctx + ": expected an object");
        WordToken tok;
        tok.index = as_index(require(w, "index", wctx), wctx + ".index");
        const auto& surface = require(w, "surface", wctx);
        const auto& pos = require(w, "pos", wctx);
        if (!surface.is_string() || !pos.is_string()) throw SchemaError(wctx + ": surface and pos must be strings");
        tok.surface = surface.get<std::string>();
        tok.pos = pos.get<std::string>();
        tok.maskable = is_maskable_pos(tok.pos);
        inst.words.push_back(std::move(tok));
    }

    inst.base_scores = as_numbers(require(j, "base_scores", ictx), ictx + ".base_scores");

    const auto& samples = require(j, "mask_samples", ictx);
    if (!samples.is_array()) throw SchemaError(ictx + ".mask_samples: expected an array");
    for (std::size_t t = 0; t < samples.size(); ++t) {
        const std::string sctx = ictx + ".mask_samples[" + std::to_string(t) + "]";
        if (!samples[t].is_object()) throw SchemaError(sctx + ": expected an object");
        MaskSample s;
        s.masked = as_indices(require(samples[t], "masked", sctx), sctx + ".masked");
        s.scores = as_numbers(require(samples[t], "scores", sctx), sctx + ".scores");
        inst.mask_samples.push_back(std::move(s));
    }

    if (auto it = j.find("foil_labels"); it != j.end() && !it->is_null())
        inst.foil_labels = as_indices(*it, ictx + ".foil_labels");
    inst.human_score = optional_number(j, "human_score", ictx);
    inst.full_score = optional_number(j, "full_score", ictx);
    return inst;
}

inline nlohmann::json instance_to_json(const ScoredInstance& inst) {
    using nlohmann::json;
    auto numbers = [](const std::vector<double>& v) {
        json a = json::array();
        for (double x : v) a.push_back(canonical_number(x));
        return a;
    };
    json j;
    j["id"] = inst.id;
    j["words"] = json::array();
    for (const auto& w : inst.words) j["words"].push_back({{"index", w.index}, {"surface", w.surface}, {"pos", w.pos}});
    j["base_scores"] = numbers(inst.base_scores);
    j["mask_samples"] = json::array();
    for (const auto& s : inst.mask_samples) j["mask_samples"].push_back({{"masked", s.masked}, {"scores", numbers(s.scores)}});
    if (inst.foil_labels) {
        std::vector<int> labels = *inst.foil_labels;
        std::sort(labels.begin(), labels.end());
        j["foil_labels"] = labels;
    }
    if (inst.human_score) j["human_score"] = canonical_number(*inst.human_score);
    if (inst.full_score) j["full_score"] = canonical_number(*inst.full_score);
    return j;
}

// Parses and validates a whole stream. Nothing is returned unless every
// instance passes.
inline Dataset read_dataset(std::istream& in, DataKind kind, Split split = Split::calibration) {
    Dataset ds;
    ds.split = split;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string ctx = "line " + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(ctx + ": invalid JSON (" + e.what() + ")");
        }
        ds.instances.push_back(instance_from_json(j, ctx));
    }
    validate_dataset(ds, kind);
    return ds;
}

inline Dataset load_dataset(const std::string& path, DataKind kind, Split split = Split::calibration) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    return read_dataset(in, kind, split);
}

// Canonical form: sorted keys, numbers rounded to 9 significant digits,
// foil labels sorted, one instance per line.
inline void write_dataset(std::ostream& out, const Dataset& ds) {
    for (const auto& inst : ds.instances) out << instance_to_json(inst).dump() << '\n';
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write '" + path + "'");
    write_dataset(out, ds);
}

// ---------------------------------------------------------------------------
// Distribution summary

struct DistributionSummary {
    double mu = 0.0;
    double sigma = 0.0;            // population std (divisor I*T)
    std::vector<double> flat;      // S[t][i], row-major in t
};

inline DistributionSummary summarize_scores(std::vector<double> flat) {
    if (flat.size() < 2)
        throw DegenerateDistribution("need at least 2 scores, found " + std::to_string(flat.size()));
    DistributionSummary out;
    double sum = 0.0;
    for (double v : flat) sum += v;
    out.mu = sum / static_cast<double>(flat.size());
    double ss = 0.0;
    for (double v : flat) ss += (v - out.mu) * (v - out.mu);
    out.sigma = std::sqrt(ss / static_cast<double>(flat.size()));
    out.flat = std::move(flat);
    return out;
}

inline DistributionSummary summarize_distribution(const ScoredInstance& inst) {
    std::vector<double> flat;
    flat.reserve(inst.text_samples() * inst.image_samples());
    for (const auto& s : inst.mask_samples) flat.insert(flat.end(), s.scores.begin(), s.scores.end());
    try {
        return summarize_scores(std::move(flat));
    } catch (const DegenerateDistribution& e) {
        throw DegenerateDistribution("instance '" + inst.id + "': " + e.what());
    }
}

}  // namespace riskctl::scoredata
