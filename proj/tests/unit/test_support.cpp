#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "riskctl/errors.hpp"
#include "riskctl/parallel.hpp"
#include "riskctl/rng.hpp"

TEST(CounterRng, StreamsAreKeyedByIds) {
    riskctl::CounterRng a(7, {1, 2, 3}), b(7, {1, 2, 3}), c(7, {1, 2, 4}), d(8, {1, 2, 3});
    std::vector<std::uint64_t> va, vb, vc, vd;
    for (int k = 0; k < 16; ++k) {
        va.push_back(a());
        vb.push_back(b());
        vc.push_back(c());
        vd.push_back(d());
    }
    EXPECT_EQ(va, vb);
    EXPECT_NE(va, vc);
    EXPECT_NE(va, vd);
    EXPECT_EQ(a.counter(), 16u);
}

TEST(CounterRng, SubstreamDoesNotAdvanceParent) {
    riskctl::CounterRng a(1), b(1);
    auto child = a.substream(5);
    child();
    EXPECT_EQ(a(), b());
    EXPECT_NE(a.substream(5)(), a.substream(6)());
}

TEST(CounterRng, RoughlyUniform) {
    riskctl::CounterRng rng(42, {0});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double sum = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) sum += u(rng);
    EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
    for (std::size_t workers : {1u, 2u, 3u, 16u}) {
        std::vector<std::atomic<int>> hits(37);
        riskctl::parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
        for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
    riskctl::parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelFor, RethrowsBodyFailure) {
    EXPECT_THROW(riskctl::parallel_for(10, 3,
                                       [](std::size_t i) {
                                           if (i == 7) throw riskctl::NumericalError("boom");
                                       }),
                 riskctl::NumericalError);
}

TEST(Errors, MessageCarriesKind) {
    try {
        throw riskctl::MissingLabelError("instance 'x'");
    } catch (const riskctl::Error& e) {
        EXPECT_STREQ(e.what(), "MissingLabelError: instance 'x'");
    }
}

TEST(Oracle, BinomialTableIsACdf) {
    const auto t = oracle::binomial_cdf_table(20, 0.3);
    EXPECT_NEAR(t.front(), std::pow(0.7, 20), 1e-14 * t.front());
    EXPECT_EQ(t.back(), 1.0);
    for (std::size_t k = 1; k < t.size(); ++k) EXPECT_GE(t[k], t[k - 1]);
}

TEST(Oracle, TruncatedSamplerStaysInWindow) {
    std::mt19937_64 rng(3);
    for (auto [a, b] : {std::pair{-1.0, 1.0}, std::pair{2.0, 2.5}, std::pair{3.0, 40.0}, std::pair{-30.0, -29.0},
                        std::pair{-5.0, 5.0}}) {
        oracle::TruncatedNormalSampler s(a, b);
        for (int k = 0; k < 2000; ++k) {
            const double z = s(rng);
            EXPECT_GE(z, a);
            EXPECT_LE(z, b);
        }
    }
}

TEST(Oracle, KendallWithoutTiesIsTauB) {
    // For distinct values tau-c = tau * (n-1)/n * m/(m-1) with m = n, i.e. tau.
    const std::vector<double> p{1, 2, 3, 4}, r{1, 3, 2, 4};
    EXPECT_NEAR(oracle::kendall_tau_c(p, r), 4.0 / 6.0, 1e-15);
}
