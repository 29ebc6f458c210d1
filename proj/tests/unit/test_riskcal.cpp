#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "builders.hpp"
#include "riskctl/riskcal.hpp"
#include "riskctl/simulate.hpp"

namespace rc = riskctl::riskcal;
namespace cal = riskctl::calibration;
using cal::RiskKind;
using riskctl::wordscore::PredictionMode;
using riskctl::wordscore::PredictionSet;

namespace {

PredictionSet pred(std::vector<int> sel) {
    PredictionSet p;
    p.instance_id = "p";
    p.selected = std::move(sel);
    return p;
}

cal::RiskSpec spec(RiskKind kind, double alpha, PredictionMode mode = PredictionMode::multilabel) {
    cal::RiskSpec s;
    s.risk_kind = kind;
    s.alpha = alpha;
    s.mode = mode;
    return s;
}

riskctl::scoredata::Dataset dataset(std::vector<riskctl::scoredata::ScoredInstance> v) {
    riskctl::scoredata::Dataset ds;
    ds.instances = std::move(v);
    return ds;
}

}  // namespace

TEST(InstanceLoss, Examples) {
    const std::vector<int> mk{0, 1, 2};
    EXPECT_EQ(rc::instance_loss(pred({1, 2}), std::vector<int>{2}, mk, RiskKind::fdr), 0.5);
    EXPECT_EQ(rc::instance_loss(pred({}), std::vector<int>{2}, mk, RiskKind::fdr), 0.0);
    EXPECT_EQ(rc::instance_loss(pred({0}), std::vector<int>{0}, mk, RiskKind::fpr), 0.0);
}

TEST(InstanceLoss, LabelsOutsideMaskable) {
    EXPECT_THROW(rc::instance_loss(pred({}), std::vector<int>{5}, std::vector<int>{0, 1}, RiskKind::fdr),
                 riskctl::LabelError);
    EXPECT_THROW(rc::instance_loss(pred({}), std::vector<int>{}, std::vector<int>{0}, RiskKind::upr),
                 riskctl::ConfigError);
}

TEST(EmpiricalRisk, ThresholdAboveAllScoresIsZero) {
    const auto ds = dataset({build::from_raw("a", {1.0, -1.0}, {0}), build::from_raw("b", {0.5, 0.4}, {})});
    EXPECT_EQ(rc::empirical_risk(ds, 1.0, spec(RiskKind::fdr, 0.2)), 0.0);
}

TEST(EmpiricalRisk, AllFoilsIsZeroAtAnyThreshold) {
    const auto ds = dataset({build::from_raw("a", {1.0, -1.0}, {0, 1}), build::from_raw("b", {0.3}, {0})});
    EXPECT_EQ(rc::empirical_risk(ds, 0.0, spec(RiskKind::fdr, 0.2)), 0.0);
}

TEST(EmpiricalRisk, MeanOfInstanceLosses) {
    // a: both words selected, one foil -> 0.5; b: one correct word -> 0
    const auto ds = dataset({build::from_raw("a", {1.0, 1.0}, {0}), build::from_raw("b", {1.0}, {0})});
    EXPECT_EQ(rc::empirical_risk(ds, 0.5, spec(RiskKind::fdr, 0.2)), 0.25);
}

TEST(EmpiricalRisk, MissingLabels) {
    auto inst = build::from_raw("a", {1.0}, {});
    inst.foil_labels.reset();
    EXPECT_THROW(rc::empirical_risk(dataset({inst}), 0.5, spec(RiskKind::fdr, 0.2)), riskctl::MissingLabelError);
}

TEST(CaseLoss, MatchesGenericPath) {
    riskctl::simulate::SynthConfig cfg;
    cfg.n_cal = 60;
    cfg.n_test = 1;
    cfg.separation = 0.3;
    for (bool multi : {false, true}) {
        cfg.multiword_masks = multi;
        const auto ds = riskctl::simulate::generate_detection(cfg).first;
        const auto cases = rc::make_cases(ds);
        for (auto kind : {RiskKind::fdr, RiskKind::fpr})
            for (auto mode : {PredictionMode::multiclass, PredictionMode::multilabel})
                for (double lam : {0.0, 0.2, 0.45, 0.5, 0.55, 0.7, 1.0})
                    EXPECT_DOUBLE_EQ(rc::mean_loss(cases, lam, kind, mode),
                                     rc::empirical_risk(ds, lam, spec(kind, 0.2, mode)));
    }
}

TEST(RiskCurve, WorkerCountDoesNotMatter) {
    riskctl::simulate::SynthConfig cfg;
    cfg.n_cal = 80;
    cfg.n_test = 1;
    const auto cases = rc::make_cases(riskctl::simulate::generate_detection(cfg).first);
    const auto grid = cal::linear_grid(101);
    EXPECT_EQ(rc::risk_curve(cases, grid, RiskKind::fdr, PredictionMode::multilabel, 1),
              rc::risk_curve(cases, grid, RiskKind::fdr, PredictionMode::multilabel, 7));
}

TEST(RiskCurve, MonotoneForFprAndMulticlassFdr) {
    riskctl::simulate::SynthConfig cfg;
    cfg.n_cal = 150;
    cfg.n_test = 1;
    cfg.separation = 0.4;
    const auto grid = cal::linear_grid(201);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        cfg.seed = seed;
        const auto cases = rc::make_cases(riskctl::simulate::generate_detection(cfg).first);
        for (auto [kind, mode] : {std::pair{RiskKind::fpr, PredictionMode::multilabel},
                                  std::pair{RiskKind::fpr, PredictionMode::multiclass},
                                  std::pair{RiskKind::fdr, PredictionMode::multiclass}}) {
            const auto r = rc::risk_curve(cases, grid, kind, mode);
            for (std::size_t k = 1; k < r.size(); ++k) EXPECT_LE(r[k], r[k - 1]);
        }
    }
}

TEST(RiskCurve, MultilabelFdrCanRise) {
    // Clean word scores above the foil: dropping the foil leaves only the
    // clean word selected.
    const auto ds = dataset({build::from_raw("a", {1.0, 0.2}, {1})});
    const auto cases = rc::make_cases(ds);
    EXPECT_EQ(rc::mean_loss(cases, 0.5, RiskKind::fdr, PredictionMode::multilabel), 0.5);
    EXPECT_EQ(rc::mean_loss(cases, 0.6, RiskKind::fdr, PredictionMode::multilabel), 1.0);
}

TEST(CalibrateMonotone, SeparatedDataGivesZeroRiskBand) {
    riskctl::simulate::SynthConfig cfg;
    cfg.n_cal = 300;
    cfg.n_test = 1;
    cfg.separation = 10.0;
    cfg.noise = 0.1;
    const auto ds = riskctl::simulate::generate_detection(cfg).first;
    const auto s = spec(RiskKind::fdr, 0.2);
    const auto r = rc::calibrate_monotone(ds, s);
    ASSERT_TRUE(r.lambda_hat);
    // Clamped raw scores put every foil at sigmoid(1.25) and every clean
    // word at sigmoid(-1.25).
    for (double lam : {0.25, 0.5, 0.75}) EXPECT_EQ(rc::empirical_risk(ds, lam, s), 0.0);
    EXPECT_LE(*r.lambda_hat, 1.0 / (1.0 + std::exp(1.25)) + 1e-3);
}

TEST(CalibrateMonotone, AllFoilDataTakesSmallestLambda) {
    std::vector<riskctl::scoredata::ScoredInstance> v;
    for (int i = 0; i < 50; ++i) v.push_back(build::from_raw("i" + std::to_string(i), {0.3, -0.2}, {0, 1}));
    const auto r = rc::calibrate_monotone(dataset(v), spec(RiskKind::fdr, 0.2));
    EXPECT_EQ(*r.lambda_hat, 0.0);
}

TEST(CalibrateMonotone, InfeasibleToleranceThrows) {
    riskctl::simulate::SynthConfig cfg;
    cfg.n_cal = 100;
    cfg.n_test = 1;
    const auto ds = riskctl::simulate::generate_detection(cfg).first;
    EXPECT_THROW(rc::calibrate_monotone(ds, spec(RiskKind::fdr, 0.001)), riskctl::NoFeasibleLambda);
    EXPECT_FALSE(rc::calibrate_monotone_unchecked(rc::make_cases(ds), spec(RiskKind::fdr, 0.001)).lambda_hat);
}

TEST(CalibrateMonotone, SuffixHoldsAndCurveRecorded) {
    riskctl::simulate::SynthConfig cfg;
    cfg.n_cal = 400;
    cfg.n_test = 1;
    cfg.seed = 12;
    const auto ds = riskctl::simulate::generate_detection(cfg).first;
    const auto s = spec(RiskKind::fpr, 0.1);
    const auto r = rc::calibrate_monotone(ds, s);
    ASSERT_EQ(r.curve.size(), s.lambda_grid.size());
    for (const auto& p : r.curve)
        if (p.lambda >= *r.lambda_hat) {
            EXPECT_LE(p.ucb, 0.1);
        }
    EXPECT_EQ(r.diagnostics.at("nonmonotone_steps"), 0.0);
    EXPECT_LE(r.diagnostics.at("risk_at_lambda_hat"), 0.1);
}

TEST(CalibrateMonotone, RejectsUpr) {
    cal::RiskSpec s;
    s.risk_kind = RiskKind::upr;
    EXPECT_THROW(rc::calibrate_monotone_unchecked(std::vector<rc::DetectionCase>{}, s), riskctl::ConfigError);
}

TEST(LttCalibrate, DetectionRisk) {
    riskctl::simulate::SynthConfig cfg;
    cfg.n_cal = 500;
    cfg.n_test = 1;
    const auto ds = riskctl::simulate::generate_detection(cfg).first;
    auto s = spec(RiskKind::fdr, 0.3);
    s.lambda_grid = cal::linear_grid(101);
    const auto r = rc::ltt_calibrate(ds, s);
    for (const auto& p : r.p_values) {
        const bool in = std::find(r.accepted.begin(), r.accepted.end(), p.lambda) != r.accepted.end();
        EXPECT_EQ(in, p.p < r.threshold);
    }
    EXPECT_LE(rc::empirical_risk(ds, *r.lambda_hat, s), 0.3);
    s.alpha = 0.001;
    EXPECT_THROW(rc::ltt_calibrate(ds, s), riskctl::EmptyAcceptedSet);
}
