#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace pista;

TEST(Haar, ConstantImageHasOnlyLowpass)
{
    ComplexImage x(4, 4);
    for (auto& v : x.values()) v = 2.0;
    const auto a = analyze(x);
    for (const auto& v : a[FrameCoefficients::LL].values()) EXPECT_EQ(v, Complex(2.0, 0.0));
    for (int b = 1; b < 4; ++b)
        for (const auto& v : a[b].values()) EXPECT_EQ(v, Complex(0.0, 0.0));
}

TEST(Haar, TightFrameAndPerfectReconstruction)
{
    std::mt19937_64 rng(20);
    for (auto [h, w] : {std::pair{8, 8}, std::pair{64, 64}, std::pair{16, 10}, std::pair{2, 2}}) {
        const ComplexImage x = oracle::random_image(h, w, rng);
        const auto a = analyze(x);
        EXPECT_LE(std::abs(a.squared_norm() - squared_norm(x)) / squared_norm(x), 1e-12);
        EXPECT_LE(norm(synthesize(a) - x) / norm(x), 1e-12);
    }
}

TEST(Haar, MatchesDenseMatrixOracle)
{
    std::mt19937_64 rng(21);
    const oracle::Matrix W = oracle::haar_matrix(8, 8);
    const ComplexImage x = oracle::random_image(8, 8, rng);
    const auto a = analyze(x);
    std::vector<Complex> flat;
    for (int b = 0; b < 4; ++b) flat.insert(flat.end(), a[b].values().begin(), a[b].values().end());
    const auto dense = W.apply(oracle::flatten(x));
    EXPECT_LE(oracle::max_abs_diff(flat, dense), 1e-10);

    FrameCoefficients c{{oracle::random_image(8, 8, rng), oracle::random_image(8, 8, rng),
                         oracle::random_image(8, 8, rng), oracle::random_image(8, 8, rng)}};
    std::vector<Complex> cflat;
    for (int b = 0; b < 4; ++b) cflat.insert(cflat.end(), c[b].values().begin(), c[b].values().end());
    EXPECT_LE(oracle::max_abs_diff(oracle::flatten(synthesize(c)), W.apply_adjoint(cflat)), 1e-10);
}

TEST(Haar, SynthesisIsAdjoint)
{
    std::mt19937_64 rng(22);
    const ComplexImage x = oracle::random_image(12, 14, rng);
    FrameCoefficients c{{oracle::random_image(12, 14, rng), oracle::random_image(12, 14, rng),
                         oracle::random_image(12, 14, rng), oracle::random_image(12, 14, rng)}};
    const Complex lhs = inner(analyze(x), c);
    const Complex rhs = inner(x, synthesize(c));
    EXPECT_LE(std::abs(lhs - rhs) / std::abs(lhs), 1e-12);
}

TEST(Haar, ZeroAndOddDimensions)
{
    const auto a = analyze(ComplexImage(4, 6));
    EXPECT_EQ(a.l1_norm(), 0.0);
    EXPECT_THROW(analyze(ComplexImage(5, 4)), ShapeError);
    EXPECT_THROW(analyze(ComplexImage(4, 3)), ShapeError);
}

TEST(SoftThreshold, Examples)
{
    EXPECT_LE(std::abs(soft_threshold(Complex{3.0, 4.0}, 1.0) - Complex{2.4, 3.2}), 1e-15);
    EXPECT_EQ(soft_threshold(Complex{0.3, 0.4}, 1.0), Complex(0.0, 0.0));
    EXPECT_EQ(soft_threshold(Complex{0.0, 0.0}, 0.5), Complex(0.0, 0.0));
    EXPECT_EQ(soft_threshold(Complex{-2.0, 0.0}, 0.5), Complex(-1.5, 0.0));
    // boundary |β| = t maps to zero
    EXPECT_EQ(soft_threshold(Complex{0.6, 0.8}, 1.0), Complex(0.0, 0.0));
}

TEST(SoftThreshold, MatchesGridSearchProx)
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> ut(0.0, 1.5);
    for (int trial = 0; trial < 100; ++trial) {
        const Complex beta{u(rng), u(rng)};
        const double t = ut(rng);
        const Complex grid = oracle::grid_prox(beta, t);
        // the grid minimizer lies within one diagonal cell of the true minimizer
        EXPECT_LE(std::abs(soft_threshold(beta, t) - grid), 2.0 * oracle::grid_prox_resolution)
            << beta << " t=" << t;
    }
}

TEST(SoftThreshold, NonExpansiveAndIdentityAtZero)
{
    std::mt19937_64 rng(24);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 1000; ++trial) {
        const Complex a{n(rng), n(rng)};
        const Complex b{n(rng), n(rng)};
        const double t = std::abs(n(rng));
        EXPECT_LE(std::abs(soft_threshold(a, t) - soft_threshold(b, t)), std::abs(a - b) + 1e-15);
        EXPECT_EQ(soft_threshold(a, 0.0), a);
        if (std::abs(a) <= t) {
            EXPECT_EQ(soft_threshold(a, t), Complex(0.0, 0.0));
        }
    }
}

TEST(SoftThreshold, NegativeThresholdRejected)
{
    const auto a = analyze(ComplexImage(4, 4));
    EXPECT_THROW(soft_threshold(a, -0.1), ConfigError);
}
