#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "qbeat/quadrature.hpp"

using namespace qbeat;

TEST(Quadrature, IntegratesPolynomialExactly) {
    // Degree 12: both the 7-point Gauss and 15-point Kronrod rules are exact,
    // so one panel suffices.
    auto f = [](double x) { return std::pow(x, 12); };
    const auto r = quad::integrate<double>(f, -1.0, 1.0);
    EXPECT_NEAR(r.value, 2.0 / 13.0, 1e-15);
    EXPECT_EQ(r.intervals, 1u);
}

TEST(Quadrature, GaussianIntegral) {
    auto f = [](double x) { return std::exp(-x * x); };
    const auto breaks = quad::uniform_breaks(-9.0, 9.0, 18);
    const auto r = quad::integrate<double>(f, breaks);
    EXPECT_NEAR(r.value, std::sqrt(std::numbers::pi), 1e-13);
}

TEST(Quadrature, ComplexOscillatoryGaussian) {
    // Fourier transform of exp(-x^2): sqrt(pi) exp(-w^2 / 4).
    for (double w : {0.0, 1.0, 3.0, 7.5}) {
        auto f = [w](double x) { return std::polar(std::exp(-x * x), w * x); };
        const auto r = quad::integrate<std::complex<double>>(f, -9.0, 9.0);
        const double want = std::sqrt(std::numbers::pi) * std::exp(-w * w / 4.0);
        EXPECT_NEAR(r.value.real(), want, 1e-13) << "w = " << w;
        EXPECT_NEAR(r.value.imag(), 0.0, 1e-13) << "w = " << w;
    }
}

TEST(Quadrature, AdaptsToNarrowFeature) {
    // A spike of width 1e-3 at the panel midpoint, where both rules sample.
    auto f = [](double x) { return std::exp(-0.5 * std::pow(x / 1e-3, 2)); };
    const auto r = quad::integrate<double>(f, -1.0, 1.0);
    EXPECT_NEAR(r.value, 1e-3 * std::sqrt(2.0 * std::numbers::pi), 1e-13);
    EXPECT_GT(r.intervals, 1u);
}

TEST(Quadrature, ThrowsWhenBudgetExhausted) {
    auto f = [](double x) { return 1.0 / std::sqrt(std::abs(x) + 1e-300); };
    quad::Options opt;
    opt.max_intervals = 5;
    EXPECT_THROW(quad::integrate<double>(f, -1.0, 1.0, opt), NumericalError);
    try {
        quad::integrate<double>(f, -1.0, 1.0, opt);
    } catch (const NumericalError& e) {
        EXPECT_GT(e.achieved(), opt.abs_tol);
    }
}

TEST(Quadrature, ConvergesAfterLargeErrorPanelIsSplit) {
    // The first panel's error estimate dwarfs its children's; convergence
    // must be judged on the re-summed estimate.
    auto f = [](double x) { return 1.0 / std::sqrt(std::abs(x) + 1e-300); };
    quad::Options opt;
    opt.abs_tol = 1e-6;
    const auto r = quad::integrate<double>(f, 0.0, 1.0, opt);
    EXPECT_NEAR(r.value, 2.0, 1e-6);
    EXPECT_LE(r.error, 1e-6);
}

TEST(Quadrature, RejectsEmptyBreaks) {
    const std::vector<double> one{0.0};
    EXPECT_THROW(quad::integrate<double>([](double) { return 1.0; }, one), ParameterError);
}

TEST(Quadrature, UniformBreaksHitEndpoints) {
    const auto b = quad::uniform_breaks(-2.0, 3.0, 5);
    ASSERT_EQ(b.size(), 6u);
    EXPECT_EQ(b.front(), -2.0);
    EXPECT_EQ(b.back(), 3.0);
    EXPECT_DOUBLE_EQ(b[1], -1.0);
}
