// riskctl: calibrate, apply and evaluate risk-controlled foil detection and
// score intervals from JSON Lines score files.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 calibration
// found no admissible lambda (NoFeasibleLambda / EmptyAcceptedSet).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "json_config.hpp"
#include "riskctl/riskctl.hpp"

namespace {

using nlohmann::json;
namespace cal = riskctl::calibration;
namespace sd = riskctl::scoredata;
namespace ws = riskctl::wordscore;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNoLambda = 2;

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw riskctl::ConfigError("cannot write '" + path + "'");
    out << text;
    if (!out) throw riskctl::ConfigError("write failed for '" + path + "'");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw riskctl::ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw riskctl::SchemaError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_resolved_config(const CLI::App& app, const std::string& out) {
    write_file(out + ".config.json", riskctl::cli::resolved_config(app).dump(2) + "\n");
}

double lambda_from_calibration(const std::string& path) {
    const json j = read_json_file(path);
    const auto it = j.find("lambda_hat");
    if (it == j.end() || !it->is_number())
        throw riskctl::ConfigError("'" + path + "' carries no lambda_hat");
    return it->get<double>();
}

void print_row(const char* key, double v) { std::printf("  %-22s %.6g\n", key, v); }
void print_row(const char* key, const std::string& v) { std::printf("  %-22s %s\n", key, v.c_str()); }

// Evenly spaced rows of a long curve plus the selected lambda.
std::vector<std::size_t> table_rows(std::size_t n, std::optional<std::size_t> pick, std::size_t max_rows = 21) {
    std::vector<std::size_t> rows;
    if (n <= max_rows) {
        for (std::size_t k = 0; k < n; ++k) rows.push_back(k);
    } else {
        for (std::size_t r = 0; r < max_rows; ++r) rows.push_back(r * (n - 1) / (max_rows - 1));
    }
    if (pick) rows.push_back(*pick);
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return rows;
}

std::optional<std::size_t> grid_index(const std::vector<double>& grid, std::optional<double> v) {
    if (!v) return std::nullopt;
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (grid[k] == *v) return k;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Shared option groups

struct GridOptions {
    std::size_t size = 0;  // 0 = default for the risk
    std::optional<double> min;
    std::optional<double> max;

    void add(CLI::App* app) {
        app->add_option("--grid-size", size, "number of grid points (0 = 1001 for fdr/fpr, 200 for upr)");
        app->add_option("--grid-min", min, "smallest grid value (default 0, or 0.1 for upr)");
        app->add_option("--grid-max", max, "largest grid value (default 1, or 10 for upr)");
    }

    [[nodiscard]] std::vector<double> build(cal::RiskKind kind) const {
        if (kind == cal::RiskKind::upr)
            return cal::geometric_grid(size ? size : cal::kDefaultScaleGrid, min.value_or(0.1), max.value_or(10.0));
        return cal::linear_grid(size ? size : cal::kDefaultDetectionGrid, min.value_or(0.0), max.value_or(1.0));
    }
};

void add_workers(CLI::App* app, std::size_t& workers) {
    app->add_option("--workers", workers, "worker threads (default: RISKCTL_WORKERS or 1)")
        ->check(CLI::PositiveNumber);
}

// ---------------------------------------------------------------------------
// Detection metrics shared by detect and eval

riskctl::metrics::MetricReport detection_report(const sd::Dataset& ds, const std::vector<ws::ErrorScoreVector>& fvs,
                                                const std::vector<ws::PredictionSet>& preds) {
    namespace m = riskctl::metrics;
    std::vector<std::vector<int>> labels, maskable;
    std::vector<double> instance_scores;
    std::vector<int> instance_labels;
    double fdr = 0.0, fpr = 0.0;
    for (std::size_t k = 0; k < ds.size(); ++k) {
        const auto& inst = ds.instances[k];
        labels.push_back(inst.labels());
        maskable.push_back(inst.maskable_indices());
        instance_scores.push_back(fvs[k].max_score());
        instance_labels.push_back(labels.back().empty() ? 0 : 1);
        fdr += m::fdr_loss(preds[k].selected, labels.back());
        fpr += m::fpr_loss(preds[k].selected, labels.back(), maskable.back());
    }
    m::MetricReport report;
    report.n_instances = ds.size();
    report.counts = m::word_counts(preds, labels, maskable);
    const auto word = m::prf_from_counts(report.counts);
    const auto inst = m::instance_prf(preds, labels);
    report.values["word_precision"] = word.precision;
    report.values["word_recall"] = word.recall;
    report.values["word_f1"] = word.f1;
    report.values["instance_precision"] = inst.precision;
    report.values["instance_recall"] = inst.recall;
    report.values["instance_f1"] = inst.f1;
    report.values["fdr"] = fdr / static_cast<double>(ds.size());
    report.values["fpr"] = fpr / static_cast<double>(ds.size());
    try {
        report.values["ap"] = m::average_precision(instance_scores, instance_labels);
        report.values["la"] = m::location_accuracy(preds, fvs, labels, m::LocationVariant::top1);
        report.values["la_set"] = m::location_accuracy(preds, fvs, labels, m::LocationVariant::set);
    } catch (const riskctl::NoPositives&) {
    } catch (const riskctl::NoFoilInstances&) {
    }
    return report;
}

void print_report(const riskctl::metrics::MetricReport& r) {
    std::printf("metrics (%zu instances)\n", r.n_instances);
    for (const auto& [key, v] : r.values) print_row(key.c_str(), v);
    if (r.counts.tp + r.counts.fp + r.counts.fn + r.counts.tn == 0) return;
    std::printf("  counts                 tp=%lld fp=%lld fn=%lld tn=%lld\n", static_cast<long long>(r.counts.tp),
                static_cast<long long>(r.counts.fp), static_cast<long long>(r.counts.fn),
                static_cast<long long>(r.counts.tn));
}

bool all_labelled(const sd::Dataset& ds) {
    return std::all_of(ds.instances.begin(), ds.instances.end(), [](const auto& i) { return i.foil_labels.has_value(); });
}

bool all_rated(const sd::Dataset& ds) {
    return std::all_of(ds.instances.begin(), ds.instances.end(), [](const auto& i) { return i.human_score.has_value(); });
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateCmd {
    std::string data, out, risk = "fdr", mode = "multilabel", method = "auto", bound = "hb";
    std::optional<double> alpha;
    double delta = 0.1;
    GridOptions grid;
    std::size_t workers = riskctl::workers_from_env();
    CLI::App* app = nullptr;

    void add(CLI::App& root) {
        app = root.add_subcommand("calibrate", "select lambda on a calibration set");
        app->add_option("--data", data, "calibration dataset (JSON Lines)")->required();
        app->add_option("--out", out, "CalibrationResult JSON output")->required();
        app->add_option("--risk", risk, "risk to control")->check(CLI::IsMember({"fdr", "fpr", "upr"}));
        app->add_option("--alpha", alpha, "risk tolerance (upr: derived from lambda = 1 when omitted)");
        app->add_option("--delta", delta, "failure probability");
        app->add_option("--mode", mode, "prediction mode")->check(CLI::IsMember({"multiclass", "multilabel"}));
        app->add_option("--method", method, "calibration method (auto: monotone for fdr/fpr, ltt for upr)")
            ->check(CLI::IsMember({"auto", "monotone", "ltt"}));
        app->add_option("--bound", bound, "tail bound")->check(CLI::IsMember({"hb", "hoeffding", "bentkus"}));
        grid.add(app);
        add_workers(app, workers);
    }

    int run() const {
        cal::RiskSpec spec;
        spec.risk_kind = cal::risk_from_string(risk);
        spec.alpha = alpha;
        spec.delta = delta;
        spec.mode = ws::mode_from_string(mode);
        spec.bound = riskctl::concentration::tail_bound_from_string(bound);
        spec.lambda_grid = grid.build(spec.risk_kind);
        spec.workers = workers;
        const bool upr = spec.risk_kind == cal::RiskKind::upr;
        const std::string resolved = method == "auto" ? (upr ? "ltt" : "monotone") : method;
        if (upr && resolved == "monotone") throw riskctl::ConfigError("upr is not monotone in lambda; use --method ltt");
        spec.validate();

        const auto ds = sd::load_dataset(data, upr ? sd::DataKind::interval : sd::DataKind::detection);
        const auto result = resolved == "ltt" ? riskctl::riskcal::ltt_calibrate_unchecked(ds, spec)
                                              : riskctl::riskcal::calibrate_monotone_unchecked(
                                                    riskctl::riskcal::make_cases(ds), spec);
        json j = result.to_json();
        j["mode"] = mode;
        write_file(out, j.dump(2) + "\n");
        write_resolved_config(*app, out);
        print(result);

        if (!result.lambda_hat) {
            if (resolved == "ltt")
                std::cerr << "EmptyAcceptedSet: no lambda has p < " << result.threshold << " at alpha " << result.alpha
                          << "\n";
            else
                std::cerr << "NoFeasibleLambda: UCB at the largest lambda exceeds alpha " << result.alpha << "\n";
            return kExitNoLambda;
        }
        return kExitOk;
    }

    void print(const cal::CalibrationResult& r) const {
        std::printf("calibration\n");
        print_row("method", cal::to_string(r.method));
        print_row("risk", cal::to_string(r.risk_kind));
        print_row("alpha", r.alpha);
        print_row("delta", r.delta);
        print_row("n", static_cast<double>(r.n));
        print_row("bound", riskctl::concentration::to_string(r.bound));
        if (r.lambda_hat) print_row("lambda_hat", *r.lambda_hat);
        else print_row("lambda_hat", "none");
        for (const auto& [key, v] : r.diagnostics) print_row(key.c_str(), v);
        if (r.method == cal::Method::monotone_ucb) {
            std::vector<double> grid;
            for (const auto& p : r.curve) grid.push_back(p.lambda);
            std::printf("\n  %12s %12s %12s\n", "lambda", "risk", "ucb");
            for (auto k : table_rows(r.curve.size(), grid_index(grid, r.lambda_hat)))
                std::printf("  %12.6g %12.6g %12.6g%s\n", r.curve[k].lambda, r.curve[k].risk, r.curve[k].ucb,
                            r.lambda_hat && *r.lambda_hat == r.curve[k].lambda ? "  <" : "");
        } else {
            print_row("threshold", r.threshold);
            print_row("accepted", static_cast<double>(r.accepted.size()));
            std::vector<double> grid;
            for (const auto& p : r.p_values) grid.push_back(p.lambda);
            std::printf("\n  %12s %12s %12s\n", "lambda", "risk", "p");
            for (auto k : table_rows(r.p_values.size(), grid_index(grid, r.lambda_hat)))
                std::printf("  %12.6g %12.6g %12.6g%s\n", r.p_values[k].lambda, r.p_values[k].risk, r.p_values[k].p,
                            r.lambda_hat && *r.lambda_hat == r.p_values[k].lambda ? "  <" : "");
        }
    }
};

// ---------------------------------------------------------------------------
// detect

struct DetectCmd {
    std::string data, out, calibration, mode = "multilabel", report;
    std::optional<double> lambda;
    CLI::App* app = nullptr;

    void add(CLI::App& root) {
        app = root.add_subcommand("detect", "apply a threshold and emit prediction sets");
        app->add_option("--data", data, "dataset (JSON Lines)")->required();
        app->add_option("--out", out, "prediction sets (JSON Lines)")->required();
        auto* l = app->add_option("--lambda", lambda, "threshold on f_v");
        auto* c = app->add_option("--calibration", calibration, "CalibrationResult JSON providing lambda_hat");
        l->excludes(c);
        app->add_option("--mode", mode, "prediction mode")->check(CLI::IsMember({"multiclass", "multilabel"}));
        app->add_option("--report", report, "MetricReport JSON output (needs foil labels)");
    }

    int run() const {
        if (!lambda && calibration.empty()) throw riskctl::ConfigError("detect needs --lambda or --calibration");
        const double lam = lambda ? *lambda : lambda_from_calibration(calibration);
        const auto m = ws::mode_from_string(mode);
        const auto ds = sd::load_dataset(data, sd::DataKind::detection, sd::Split::test);
        const auto fvs = ws::error_scores(ds);
        std::vector<ws::PredictionSet> preds;
        std::string lines;
        for (const auto& fv : fvs) {
            preds.push_back(ws::predict(fv, lam, m));
            lines += json{{"id", fv.instance_id}, {"selected", preds.back().selected}, {"lambda", lam}, {"mode", mode}}
                         .dump() +
                     "\n";
        }
        write_file(out, lines);
        write_resolved_config(*app, out);

        std::size_t flagged = 0;
        for (const auto& p : preds) flagged += p.selected.empty() ? 0 : 1;
        std::printf("detection\n");
        print_row("lambda", lam);
        print_row("mode", mode);
        print_row("instances", static_cast<double>(preds.size()));
        print_row("flagged", static_cast<double>(flagged));
        if (all_labelled(ds)) {
            const auto r = detection_report(ds, fvs, preds);
            print_report(r);
            if (!report.empty()) write_file(report, r.to_json().dump(2) + "\n");
        } else if (!report.empty()) {
            throw riskctl::MissingLabelError("--report needs foil_labels on every instance");
        }
        return kExitOk;
    }
};

// ---------------------------------------------------------------------------
// intervals

struct IntervalsCmd {
    std::string data, out, lambda_scale = "1", calibration, cal_data;
    double z = 1.0, delta = 0.1;
    std::size_t workers = riskctl::workers_from_env();
    CLI::App* app = nullptr;

    void add(CLI::App& root) {
        app = root.add_subcommand("intervals", "calibrated score intervals from truncated-Gaussian fits");
        app->add_option("--data", data, "dataset (JSON Lines)")->required();
        app->add_option("--out", out, "intervals (JSON Lines)")->required();
        app->add_option("--lambda-scale", lambda_scale, "std scale: a positive number or 'calibrated'");
        app->add_option("--calibration", calibration, "CalibrationResult JSON (with --lambda-scale calibrated)");
        app->add_option("--cal-data", cal_data, "calibration dataset to fit the scale on (with --lambda-scale calibrated)");
        app->add_option("--z", z, "half-width in std units")->check(CLI::NonNegativeNumber);
        app->add_option("--delta", delta, "failure probability when fitting on --cal-data");
        add_workers(app, workers);
    }

    [[nodiscard]] double resolve_scale() const {
        if (lambda_scale != "calibrated") {
            double v = 0.0;
            try {
                std::size_t used = 0;
                v = std::stod(lambda_scale, &used);
                if (used != lambda_scale.size()) throw std::invalid_argument("trailing text");
            } catch (const std::exception&) {
                throw riskctl::ConfigError("--lambda-scale must be a number or 'calibrated'");
            }
            if (!(v > 0.0)) throw riskctl::ConfigError("--lambda-scale must be > 0");
            return v;
        }
        if (!calibration.empty()) return lambda_from_calibration(calibration);
        if (cal_data.empty()) throw riskctl::ConfigError("--lambda-scale calibrated needs --calibration or --cal-data");
        cal::RiskSpec spec;
        spec.risk_kind = cal::RiskKind::upr;
        spec.delta = delta;
        spec.lambda_grid = cal::geometric_grid(cal::kDefaultScaleGrid);
        spec.workers = workers;
        const auto ds = sd::load_dataset(cal_data, sd::DataKind::interval);
        return *riskctl::intervals::calibrate_intervals(ds, spec).lambda_hat;
    }

    int run() const {
        const double scale = resolve_scale();
        const auto ds = sd::load_dataset(data, sd::DataKind::interval, sd::Split::test);
        const auto prepared = riskctl::intervals::prepare_intervals(ds, false);
        std::string lines;
        for (const auto& r : riskctl::intervals::predict_intervals(prepared, scale, z))
            lines += json{{"id", r.instance_id}, {"mean_hat", r.mean_hat}, {"std_hat", r.std_hat}, {"lower", r.lower},
                          {"upper", r.upper}}
                         .dump() +
                     "\n";
        write_file(out, lines);
        write_resolved_config(*app, out);
        std::printf("intervals\n");
        print_row("lambda_scale", scale);
        print_row("z", z);
        print_row("instances", static_cast<double>(prepared.size()));
        if (all_rated(ds) && prepared.size() >= 2) {
            const auto e = riskctl::intervals::upr_evaluate(prepared, scale);
            if (e.ups) print_row("ups", *e.ups);
            print_row("upr", e.risk);
        }
        return kExitOk;
    }
};

// ---------------------------------------------------------------------------
// eval

struct EvalCmd {
    std::string data, task = "detection", calibration, mode = "multilabel", out;
    std::optional<double> lambda;
    double z = 1.0;
    CLI::App* app = nullptr;

    void add(CLI::App& root) {
        app = root.add_subcommand("eval", "metrics on a labelled dataset");
        app->add_option("--data", data, "dataset (JSON Lines)")->required();
        app->add_option("--task", task, "what to evaluate")->check(CLI::IsMember({"detection", "interval"}));
        auto* l = app->add_option("--lambda", lambda, "threshold (detection) or std scale (interval)");
        auto* c = app->add_option("--calibration", calibration, "CalibrationResult JSON providing lambda_hat");
        l->excludes(c);
        app->add_option("--mode", mode, "prediction mode")->check(CLI::IsMember({"multiclass", "multilabel"}));
        app->add_option("--z", z, "interval half-width in std units")->check(CLI::NonNegativeNumber);
        app->add_option("--out", out, "MetricReport JSON output");
    }

    [[nodiscard]] riskctl::metrics::MetricReport interval_report(const sd::Dataset& ds, double scale) const {
        namespace iv = riskctl::intervals;
        const auto prepared = iv::prepare_intervals(ds);
        const auto res = iv::predict_intervals(prepared, scale, z);
        std::vector<double> means, errors, stds;
        double covered = 0.0;
        for (std::size_t k = 0; k < res.size(); ++k) {
            means.push_back(res[k].mean_hat);
            errors.push_back(std::abs(res[k].mean_hat - prepared.human[k]));
            stds.push_back(res[k].std_hat);
            if (prepared.human[k] >= res[k].lower && prepared.human[k] <= res[k].upper) covered += 1.0;
        }
        riskctl::metrics::MetricReport r;
        r.n_instances = res.size();
        const auto e = iv::upr_evaluate(prepared, scale);
        r.values["upr"] = e.risk;
        if (e.ups) r.values["ups"] = *e.ups;
        r.values["coverage"] = covered / static_cast<double>(res.size());
        double mae = 0.0;
        for (double v : errors) mae += v;
        r.values["mean_abs_error"] = mae / static_cast<double>(res.size());
        try {
            r.values["pearson"] = riskctl::metrics::pearson(means, prepared.human);
        } catch (const riskctl::ZeroVariance&) {
        }
        try {
            r.values["kendall_tau_c"] = riskctl::metrics::kendall_tau_c(means, prepared.human);
        } catch (const riskctl::DegenerateScale&) {
        }
        return r;
    }

    int run() const {
        double lam = task == "interval" ? 1.0 : 0.5;
        if (lambda) lam = *lambda;
        else if (!calibration.empty()) lam = lambda_from_calibration(calibration);

        riskctl::metrics::MetricReport r;
        if (task == "detection") {
            const auto ds = sd::load_dataset(data, sd::DataKind::detection, sd::Split::test);
            const auto fvs = ws::error_scores(ds);
            std::vector<ws::PredictionSet> preds;
            for (const auto& fv : fvs) preds.push_back(ws::predict(fv, lam, ws::mode_from_string(mode)));
            r = detection_report(ds, fvs, preds);
        } else {
            r = interval_report(sd::load_dataset(data, sd::DataKind::interval, sd::Split::test), lam);
        }
        json j = r.to_json();
        j["task"] = task;
        j["lambda"] = lam;
        print_row(task == "detection" ? "lambda" : "lambda_scale", lam);
        print_report(r);
        std::printf("%s\n", j.dump(2).c_str());
        if (!out.empty()) {
            write_file(out, j.dump(2) + "\n");
            write_resolved_config(*app, out);
        }
        return kExitOk;
    }
};

// ---------------------------------------------------------------------------
// simulate

struct SimulateCmd {
    riskctl::simulate::SynthConfig cfg;
    std::string mode = "multilabel", risk = "fdr", bound = "hb", out, trials_csv, cal_out, test_out;
    std::optional<double> alpha;
    double delta = 0.1;
    GridOptions grid;
    std::size_t workers = riskctl::workers_from_env();
    CLI::App* app = nullptr;

    void add(CLI::App& root) {
        app = root.add_subcommand("simulate", "synthetic data and Monte-Carlo validation of the guarantee");
        app->add_option("--n-cal", cfg.n_cal, "calibration instances per trial");
        app->add_option("--n-test", cfg.n_test, "test instances per trial (0 = 20 x n-cal)");
        app->add_option("--trials", cfg.n_trials, "independent trials");
        app->add_option("--words", cfg.words_per_caption, "maskable words per caption");
        app->add_option("--foils-min", cfg.foils_min, "fewest foils per caption");
        app->add_option("--foils-max", cfg.foils_max, "most foils per caption");
        app->add_option("--separation", cfg.separation, "mean raw score of foils (clean words: negated)");
        app->add_option("--noise", cfg.noise, "std of raw scores");
        app->add_option("--interval-noise-scale", cfg.interval_noise_scale, "true error scale over the sample spread");
        app->add_flag("--multiword", cfg.multiword_masks, "mask random word subsets against several images");
        app->add_option("--seed", cfg.seed, "random seed");
        app->add_option("--mode", mode, "prediction mode")->check(CLI::IsMember({"multiclass", "multilabel"}));
        app->add_option("--risk", risk, "risk to control")->check(CLI::IsMember({"fdr", "fpr", "upr"}));
        app->add_option("--alpha", alpha, "risk tolerance (fdr/fpr default 0.2; upr: derived when omitted)");
        app->add_option("--delta", delta, "failure probability");
        app->add_option("--bound", bound, "tail bound")->check(CLI::IsMember({"hb", "hoeffding", "bentkus"}));
        grid.add(app);
        add_workers(app, workers);
        app->add_option("--out", out, "GuaranteeReport JSON output");
        app->add_option("--trials-csv", trials_csv, "per-trial CSV output");
        app->add_option("--cal-out", cal_out, "write the trial-0 calibration dataset here");
        app->add_option("--test-out", test_out, "write the trial-0 test dataset here");
    }

    int run() {
        if (out.empty() && cal_out.empty() && test_out.empty())
            throw riskctl::ConfigError("simulate needs --out, --cal-out or --test-out");
        cfg.mode = ws::mode_from_string(mode);
        cfg.validate();
        cal::RiskSpec spec;
        spec.risk_kind = cal::risk_from_string(risk);
        const bool upr = spec.risk_kind == cal::RiskKind::upr;
        spec.alpha = alpha;
        if (!upr && !spec.alpha) spec.alpha = 0.2;
        spec.delta = delta;
        spec.mode = cfg.mode;
        spec.bound = riskctl::concentration::tail_bound_from_string(bound);
        spec.lambda_grid = grid.build(spec.risk_kind);
        spec.workers = workers;
        spec.validate();

        if (!cal_out.empty() || !test_out.empty()) {
            const auto [c, t] = upr ? riskctl::simulate::generate_interval(cfg) : riskctl::simulate::generate_detection(cfg);
            if (!cal_out.empty()) {
                sd::save_dataset(cal_out, c);
                write_resolved_config(*app, cal_out);
            }
            if (!test_out.empty()) sd::save_dataset(test_out, t);
            std::printf("wrote %zu calibration / %zu test instances\n", c.size(), t.size());
        }
        if (out.empty()) return kExitOk;

        const auto report = riskctl::simulate::validate_guarantee(cfg, spec);
        write_file(out, report.to_json().dump(2) + "\n");
        write_resolved_config(*app, out);
        if (!trials_csv.empty()) {
            std::ofstream csv(trials_csv, std::ios::binary);
            if (!csv) throw riskctl::ConfigError("cannot write '" + trials_csv + "'");
            report.write_csv(csv);
        }
        std::printf("guarantee (%s, %zu trials)\n", risk.c_str(), report.trials);
        print_row("alpha", report.alpha);
        print_row("delta", report.target_delta);
        print_row("violations", static_cast<double>(report.violations));
        print_row("violation_rate", report.violation_rate);
        print_row("failed_trials", static_cast<double>(report.failed_trials));
        print_row("mean_lambda_hat", report.mean_lambda_hat);
        print_row("mean_cal_risk", report.mean_cal_risk);
        print_row("mean_test_risk", report.mean_test_risk);
        return kExitOk;
    }
};

// ---------------------------------------------------------------------------
// report

struct ReportCmd {
    std::string data, out;
    CLI::App* app = nullptr;

    void add(CLI::App& root) {
        app = root.add_subcommand("report", "per-instance score distributions as CSV");
        app->add_option("--data", data, "dataset (JSON Lines)")->required();
        app->add_option("--out", out, "CSV output")->required();
    }

    int run() const {
        const auto ds = sd::load_dataset(data, sd::DataKind::detection);
        std::size_t width = 0;
        for (const auto& inst : ds.instances) width = std::max(width, inst.text_samples() * inst.image_samples());
        std::string csv = "id,mu,sigma,count,status";
        for (std::size_t k = 0; k < width; ++k) csv += ",s" + std::to_string(k);
        csv += "\n";
        char buf[64];
        std::size_t degenerate = 0;
        for (const auto& inst : ds.instances) {
            std::vector<double> flat;
            for (const auto& s : inst.mask_samples) flat.insert(flat.end(), s.scores.begin(), s.scores.end());
            std::string row = inst.id;
            if (row.find_first_of(",\"\n") != std::string::npos) {
                std::string quoted = "\"";
                for (char ch : row) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
                row = quoted + "\"";
            }
            if (flat.size() >= 2) {
                const auto summary = sd::summarize_scores(flat);
                std::snprintf(buf, sizeof buf, ",%.17g,%.17g", summary.mu, summary.sigma);
                row += buf;
                row += "," + std::to_string(flat.size()) + ",ok";
            } else {
                ++degenerate;
                row += ",,," + std::to_string(flat.size()) + ",degenerate";
            }
            for (std::size_t k = 0; k < width; ++k) {
                if (k < flat.size()) {
                    std::snprintf(buf, sizeof buf, ",%.17g", flat[k]);
                    row += buf;
                } else {
                    row += ",";
                }
            }
            csv += row + "\n";
        }
        write_file(out, csv);
        write_resolved_config(*app, out);
        std::printf("wrote %zu rows (%zu degenerate)\n", ds.size(), degenerate);
        return kExitOk;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App root{"riskctl: risk-controlled foil detection and score intervals"};
    root.require_subcommand(1);
    root.option_defaults()->always_capture_default();

    CalibrateCmd calibrate;
    DetectCmd detect;
    IntervalsCmd intervals;
    EvalCmd eval;
    SimulateCmd simulate;
    ReportCmd report;
    calibrate.add(root);
    detect.add(root);
    intervals.add(root);
    eval.add(root);
    simulate.add(root);
    report.add(root);
    for (CLI::App* sub : root.get_subcommands([](CLI::App*) { return true; })) sub->configurable();
    root.config_formatter(std::make_shared<riskctl::cli::JsonConfig>());
    root.set_config("--config", "", "JSON file of option values, e.g. a previous run's <out>.config.json");
    root.allow_config_extras(CLI::config_extras_mode::error);

    try {
        root.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return root.exit(e) == 0 ? kExitOk : kExitInput;
    }

    try {
        if (calibrate.app->parsed()) return calibrate.run();
        if (detect.app->parsed()) return detect.run();
        if (intervals.app->parsed()) return intervals.run();
        if (eval.app->parsed()) return eval.run();
        if (simulate.app->parsed()) return simulate.run();
        if (report.app->parsed()) return report.run();
    } catch (const riskctl::NoFeasibleLambda& e) {
        std::cerr << e.what() << "\n";
        return kExitNoLambda;
    } catch (const riskctl::EmptyAcceptedSet& e) {
        std::cerr << e.what() << "\n";
        return kExitNoLambda;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
