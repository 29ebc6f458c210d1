#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "riskctl/metrics.hpp"

namespace m = riskctl::metrics;
using riskctl::wordscore::PredictionSet;

namespace {

PredictionSet pred(std::vector<int> sel) {
    PredictionSet p;
    p.selected = std::move(sel);
    return p;
}

riskctl::wordscore::ErrorScoreVector fv(const std::vector<double>& s) {
    riskctl::wordscore::ErrorScoreVector out;
    for (std::size_t j = 0; j < s.size(); ++j) out.entries.push_back({static_cast<int>(j), 0.0, s[j], 1});
    return out;
}

}  // namespace

TEST(SetLosses, Fdr) {
    EXPECT_EQ(m::fdr_loss(std::vector<int>{1, 2}, std::vector<int>{2}), 0.5);
    EXPECT_EQ(m::fdr_loss(std::vector<int>{}, std::vector<int>{2}), 0.0);
    EXPECT_EQ(m::fdr_loss(std::vector<int>{}, std::vector<int>{}), 0.0);
}

TEST(SetLosses, Fpr) {
    EXPECT_EQ(m::fpr_loss(std::vector<int>{0}, std::vector<int>{0}, std::vector<int>{0, 1, 2}), 0.0);
    EXPECT_EQ(m::fpr_loss(std::vector<int>{0, 1}, std::vector<int>{0}, std::vector<int>{0, 1, 2}), 0.5);
    EXPECT_EQ(m::fpr_loss(std::vector<int>{0}, std::vector<int>{0}, std::vector<int>{0}), 0.0);
}

TEST(WordPrf, PerfectPredictions) {
    const std::vector<PredictionSet> p{pred({1}), pred({0, 2})};
    const std::vector<std::vector<int>> l{{1}, {0, 2}};
    const auto r = m::word_prf(p, l);
    EXPECT_EQ(r.precision, 1.0);
    EXPECT_EQ(r.recall, 1.0);
    EXPECT_EQ(r.f1, 1.0);
}

TEST(WordPrf, DirectCounts) {
    const std::vector<PredictionSet> p{pred({1, 2})};
    const std::vector<std::vector<int>> l{{2}};
    const auto r = m::word_prf(p, l);
    EXPECT_EQ(r.precision, 0.5);
    EXPECT_EQ(r.recall, 1.0);
    EXPECT_NEAR(r.f1, 2.0 / 3.0, 1e-15);
}

TEST(WordPrf, EmptyPredictions) {
    const std::vector<PredictionSet> p{pred({})};
    const std::vector<std::vector<int>> l{{0}};
    const auto r = m::word_prf(p, l);
    EXPECT_EQ(r.precision, 0.0);
    EXPECT_EQ(r.recall, 0.0);
    EXPECT_EQ(r.f1, 0.0);
}

TEST(WordPrf, Misaligned) {
    const std::vector<PredictionSet> p{pred({})};
    const std::vector<std::vector<int>> l{{0}, {1}};
    EXPECT_THROW(m::word_prf(p, l), riskctl::AlignmentError);
}

TEST(WordCounts, TrueNegativesNeedMaskable) {
    const std::vector<PredictionSet> p{pred({1, 2})};
    const std::vector<std::vector<int>> l{{2}}, mk{{0, 1, 2, 3}};
    const auto c = m::word_counts(p, l, mk);
    EXPECT_EQ(c.tp, 1);
    EXPECT_EQ(c.fp, 1);
    EXPECT_EQ(c.fn, 0);
    EXPECT_EQ(c.tn, 2);
}

TEST(WordPrf, F1ZeroIffNoTruePositives) {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<PredictionSet> p;
        std::vector<std::vector<int>> l;
        for (int k = 0; k < 5; ++k) {
            std::vector<int> s, t;
            for (int j = 0; j < 4; ++j) {
                if (rng() % 3 == 0) s.push_back(j);
                if (rng() % 3 == 0) t.push_back(j);
            }
            p.push_back(pred(s));
            l.push_back(t);
        }
        const auto c = m::word_counts(p, l);
        EXPECT_EQ(m::prf_from_counts(c).f1 == 0.0, c.tp == 0);
    }
}

TEST(InstancePrf, FlaggedIffNonEmpty) {
    const std::vector<PredictionSet> p{pred({1}), pred({}), pred({0}), pred({})};
    const std::vector<std::vector<int>> l{{1}, {2}, {}, {}};
    const auto r = m::instance_prf(p, l);
    EXPECT_EQ(r.precision, 0.5);
    EXPECT_EQ(r.recall, 0.5);
}

TEST(AveragePrecision, WorkedExample) {
    const std::vector<double> s{0.9, 0.8, 0.7};
    const std::vector<int> l{1, 0, 1};
    EXPECT_NEAR(m::average_precision(s, l), 0.5 + 0.5 * (2.0 / 3.0), 1e-15);
}

TEST(AveragePrecision, PositivesFirst) {
    EXPECT_EQ(m::average_precision(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{1, 1, 0}), 1.0);
}

TEST(AveragePrecision, TiedScoresShareAThreshold) {
    // One group of two: precision 1/2 at recall 1.
    EXPECT_EQ(m::average_precision(std::vector<double>{0.5, 0.5}, std::vector<int>{0, 1}), 0.5);
    EXPECT_EQ(m::average_precision(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}), 0.5);
}

TEST(AveragePrecision, NoPositives) {
    EXPECT_THROW(m::average_precision(std::vector<double>{0.5}, std::vector<int>{0}), riskctl::NoPositives);
}

TEST(AveragePrecision, InvariantUnderMonotoneTransform) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> s(30), t(30);
        std::vector<int> l(30);
        for (int i = 0; i < 30; ++i) {
            s[i] = std::round(u(rng) * 4) / 4;
            t[i] = std::exp(2 * s[i]) + 1;
            l[i] = rng() % 2;
        }
        l[0] = 1;
        EXPECT_EQ(m::average_precision(s, l), m::average_precision(t, l));
    }
}

TEST(AveragePrecision, MatchesDefinition) {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 2 + rng() % 200;
        std::vector<double> s(n);
        std::vector<int> l(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng() % 20) / 20.0;
            l[i] = rng() % 3 == 0;
        }
        l[0] = 1;
        EXPECT_NEAR(m::average_precision(s, l), oracle::average_precision(s, l), 1e-12);
    }
}

TEST(LocationAccuracy, Variants) {
    const std::vector<PredictionSet> p{pred({2}), pred({}), pred({0})};
    const std::vector<riskctl::wordscore::ErrorScoreVector> f{fv({0.1, 0.2, 0.9}), fv({0.8, 0.1}), fv({0.9, 0.1})};
    const std::vector<std::vector<int>> l{{2}, {0}, {}};
    EXPECT_EQ(m::location_accuracy(p, f, l, m::LocationVariant::top1), 1.0);
    EXPECT_EQ(m::location_accuracy(p, f, l, m::LocationVariant::set), 0.5);
}

TEST(LocationAccuracy, NoFoilInstances) {
    const std::vector<PredictionSet> p{pred({})};
    const std::vector<riskctl::wordscore::ErrorScoreVector> f{fv({0.1})};
    const std::vector<std::vector<int>> l{{}};
    EXPECT_THROW(m::location_accuracy(p, f, l, m::LocationVariant::top1), riskctl::NoFoilInstances);
}

TEST(Pearson, LinearRelations) {
    const std::vector<double> x{1, 2, 3, 4};
    std::vector<double> y, z;
    for (double v : x) {
        y.push_back(2 * v + 1);
        z.push_back(-v);
    }
    EXPECT_NEAR(m::pearson(x, y), 1.0, 1e-15);
    EXPECT_NEAR(m::pearson(x, z), -1.0, 1e-15);
}

TEST(Pearson, ZeroVariance) {
    EXPECT_THROW(m::pearson(std::vector<double>{1, 2}, std::vector<double>{3, 3}), riskctl::ZeroVariance);
    EXPECT_THROW(m::pearson(std::vector<double>{1}, std::vector<double>{3}), riskctl::ZeroVariance);
}

TEST(Pearson, MatchesTwoPassOracle) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(1000), y(1000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = g(rng);
        y[i] = 0.3 * x[i] + g(rng);
    }
    EXPECT_NEAR(m::pearson(x, y), oracle::pearson(x, y), 1e-12);
}

TEST(KendallTauC, WorkedExample) {
    const std::vector<double> p{1, 2, 3, 4}, r{0, 0, 1, 1};
    EXPECT_EQ(m::kendall_tau_c(p, r), 1.0);
    const std::vector<double> rev{4, 3, 2, 1};
    EXPECT_EQ(m::kendall_tau_c(rev, r), -1.0);
}

TEST(KendallTauC, DegenerateScale) {
    EXPECT_THROW(m::kendall_tau_c(std::vector<double>{1, 2, 3}, std::vector<double>{1, 1, 1}), riskctl::DegenerateScale);
    EXPECT_THROW(m::kendall_tau_c(std::vector<double>{1}, std::vector<double>{1}), riskctl::DegenerateScale);
}

TEST(KendallTauC, IdentityOnTieFreeVector) {
    // With n distinct values m = n, so the scale factors cancel.
    std::vector<double> x{3, 1, 4, 5, 9, 2, 6, 8, 7};
    EXPECT_NEAR(m::kendall_tau_c(x, x), 1.0, 1e-15);
}

TEST(KendallTauC, MatchesPairwiseCount) {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 2 + rng() % 300;
        std::vector<double> p(n), r(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = static_cast<double>(rng() % 15);
            r[i] = static_cast<double>(rng() % 5);
        }
        r[0] = 0;
        r[1] = 1;
        EXPECT_NEAR(m::kendall_tau_c(p, r), oracle::kendall_tau_c(p, r), 1e-12);
    }
}

TEST(MetricReport, Json) {
    m::MetricReport r;
    r.values["ap"] = 0.5;
    r.counts.tp = 3;
    r.n_instances = 4;
    const auto j = r.to_json();
    EXPECT_EQ(j["metrics"]["ap"], 0.5);
    EXPECT_EQ(j["counts"]["tp"], 3);
    EXPECT_EQ(j["n_instances"], 4);
}
