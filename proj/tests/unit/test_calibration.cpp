#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "riskctl/calibration.hpp"

namespace cal = riskctl::calibration;
using riskctl::concentration::TailBound;

TEST(Grids, Linear) {
    const auto g = cal::linear_grid(1001);
    ASSERT_EQ(g.size(), 1001u);
    EXPECT_EQ(g.front(), 0.0);
    EXPECT_EQ(g.back(), 1.0);
    EXPECT_NEAR(g[400], 0.4, 1e-15);
    EXPECT_THROW(cal::linear_grid(1), riskctl::ConfigError);
}

TEST(Grids, Geometric) {
    const auto g = cal::geometric_grid(200);
    ASSERT_EQ(g.size(), 200u);
    EXPECT_EQ(g.front(), 0.1);
    EXPECT_EQ(g.back(), 10.0);
    for (std::size_t k = 1; k < g.size(); ++k) EXPECT_NEAR(g[k] / g[k - 1], std::pow(100.0, 1.0 / 199), 1e-12);
    EXPECT_THROW(cal::geometric_grid(10, 0.0, 1.0), riskctl::ConfigError);
}

TEST(RiskSpec, Validation) {
    cal::RiskSpec s;
    EXPECT_THROW(s.validate(), riskctl::ConfigError);  // fdr without alpha
    s.alpha = 0.2;
    EXPECT_NO_THROW(s.validate());
    s.alpha = 1.0;
    EXPECT_THROW(s.validate(), riskctl::ConfigError);
    s.alpha = 0.2;
    s.delta = 0.0;
    EXPECT_THROW(s.validate(), riskctl::ConfigError);
    s.delta = 0.1;
    s.lambda_grid = {0.1, 0.3, 0.2};
    EXPECT_THROW(s.validate(), riskctl::ConfigError);
    s.lambda_grid = {0.1, 0.1};
    EXPECT_THROW(s.validate(), riskctl::ConfigError);
    cal::RiskSpec u;
    u.risk_kind = cal::RiskKind::upr;
    EXPECT_NO_THROW(u.validate());
}

TEST(SelectMonotone, SuffixScan) {
    const std::vector<double> ucb{0.50, 0.35, 0.22, 0.18, 0.15};
    EXPECT_EQ(cal::select_monotone(ucb, 0.2), 3u);
}

TEST(SelectMonotone, RequiresWholeSuffix) {
    const std::vector<double> ucb{0.10, 0.30, 0.15, 0.12};
    EXPECT_EQ(cal::select_monotone(ucb, 0.2), 2u);
    EXPECT_FALSE(cal::select_monotone(std::vector<double>{0.1, 0.3}, 0.2));
}

TEST(MonotoneFromRisks, WorkedGrid) {
    const std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5};
    const std::vector<double> risks{0.45, 0.3, 0.2, 0.1, 0.05};
    const auto r = cal::monotone_from_risks(grid, risks, 0.2, 0.1, 400, TailBound::hoeffding_bentkus);
    ASSERT_TRUE(r.lambda_hat);
    for (const auto& p : r.curve) EXPECT_GE(p.ucb, p.risk);
    for (const auto& p : r.curve)
        if (p.lambda >= *r.lambda_hat) {
            EXPECT_LE(p.ucb, 0.2);
        }
    EXPECT_EQ(*r.lambda_hat, 0.4);
}

TEST(MonotoneFromRisks, ToleranceOfOneTakesSmallestLambda) {
    const std::vector<double> grid{0.1, 0.2, 0.3};
    const std::vector<double> risks{0.9, 0.5, 0.1};
    const auto r = cal::monotone_from_risks(grid, risks, 1.0, 0.1, 50, TailBound::hoeffding_bentkus);
    EXPECT_EQ(*r.lambda_hat, 0.1);
}

TEST(MonotoneFromRisks, ZeroRiskEverywhere) {
    const auto grid = cal::linear_grid(11);
    const std::vector<double> risks(11, 0.0);
    const auto r = cal::monotone_from_risks(grid, risks, 0.1, 0.1, 100, TailBound::hoeffding_bentkus);
    EXPECT_EQ(*r.lambda_hat, 0.0);
}

TEST(UcbValues, DeduplicatesWithoutChangingValues) {
    const std::vector<double> risks{0.3, 0.1, 0.3, 0.0, 0.1};
    const auto u = cal::ucb_values(risks, 100, 0.1, TailBound::hoeffding_bentkus, 3);
    for (std::size_t k = 0; k < risks.size(); ++k)
        EXPECT_EQ(u[k], riskctl::concentration::ucb(risks[k], {100, 0.1}));
}

TEST(Ltt, BonferroniLevel) {
    EXPECT_DOUBLE_EQ(cal::bonferroni_level(0.05, 100), 0.0005);
    EXPECT_THROW(cal::bonferroni_level(0.05, 0), riskctl::ConfigError);
}

TEST(Ltt, Fwer) {
    EXPECT_NEAR(cal::fwer(0.05, 10), 1.0 - std::pow(0.95, 10), 1e-15);
    EXPECT_NEAR(cal::fwer(0.05, 10), 0.401263, 1e-6);
    EXPECT_NEAR(cal::fwer(0.05, 1), 0.05, 1e-16);
}

TEST(Ltt, ZeroRiskPValue) {
    // Hoeffding at t = 0 is (1 - alpha)^n; Bentkus is e (1 - alpha)^n.
    const double p = cal::ltt_p_value(0.0, 0.2, 100, TailBound::hoeffding_bentkus);
    EXPECT_NEAR(p, std::pow(0.8, 100), 1e-20);
    EXPECT_NEAR(cal::ltt_p_value(0.0, 0.2, 100, TailBound::bentkus), std::numbers::e * std::pow(0.8, 100), 1e-20);
    EXPECT_LT(p, cal::bonferroni_level(0.1, 200));
}

TEST(Ltt, AcceptsOnlyBelowThreshold) {
    const auto grid = cal::linear_grid(21, 0.5, 2.5);
    std::vector<double> risks;
    for (double l : grid) risks.push_back(0.1 + 0.2 * std::abs(l - 1.7));
    const auto r = cal::ltt_from_risks(grid, risks, 0.25, 0.1, 500, TailBound::hoeffding_bentkus);
    ASSERT_TRUE(r.lambda_hat);
    EXPECT_DOUBLE_EQ(r.threshold, 0.1 / 21);
    std::size_t accepted = 0;
    for (const auto& p : r.p_values) {
        const bool in = std::find(r.accepted.begin(), r.accepted.end(), p.lambda) != r.accepted.end();
        EXPECT_EQ(in, p.p < r.threshold);
        accepted += in;
    }
    EXPECT_EQ(accepted, r.accepted.size());
    EXPECT_NEAR(*r.lambda_hat, 1.7, 1e-12);
}

TEST(Ltt, TiesPreferLambdaNearestOne) {
    const std::vector<double> grid{0.5, 0.8, 1.1, 1.4};
    const std::vector<double> risks{0.0, 0.0, 0.0, 0.0};
    const auto r = cal::ltt_from_risks(grid, risks, 0.3, 0.1, 1000, TailBound::hoeffding_bentkus);
    EXPECT_EQ(*r.lambda_hat, 1.1);
    const std::vector<double> sym{0.8, 1.2};
    const std::vector<double> zero{0.0, 0.0};
    EXPECT_EQ(*cal::ltt_from_risks(sym, zero, 0.3, 0.1, 1000, TailBound::hoeffding_bentkus).lambda_hat, 1.2);
}

TEST(Ltt, EmptyAcceptedSet) {
    const std::vector<double> grid{0.5, 1.0};
    const std::vector<double> risks{0.5, 0.6};
    const auto r = cal::ltt_from_risks(grid, risks, 0.2, 0.1, 100, TailBound::hoeffding_bentkus);
    EXPECT_FALSE(r.lambda_hat);
    EXPECT_TRUE(r.accepted.empty());
}

TEST(CalibrationResult, JsonLayout) {
    const std::vector<double> grid{0.1, 0.2};
    const std::vector<double> risks{0.3, 0.0};
    const auto m = cal::monotone_from_risks(grid, risks, 0.2, 0.1, 500, TailBound::hoeffding_bentkus).to_json();
    EXPECT_EQ(m["method"], "monotone_ucb");
    EXPECT_EQ(m["ucb_curve"].size(), 2u);
    EXPECT_FALSE(m.contains("p_values"));
    const auto l = cal::ltt_from_risks(grid, risks, 0.2, 0.1, 500, TailBound::hoeffding_bentkus).to_json();
    EXPECT_EQ(l["method"], "ltt");
    EXPECT_EQ(l["p_values"].size(), 2u);
    EXPECT_EQ(l["accepted"].size(), 1u);
    EXPECT_EQ(l["lambda_hat"], 0.2);
}
