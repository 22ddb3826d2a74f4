#include <gtest/gtest.h>

#include <cmath>

#include "ustat/errors.hpp"
#include "ustat/rng.hpp"
#include "ustat/sample_space.hpp"

using namespace ustat;

TEST(SampleSpaces, EmptySample) {
    const auto d = Distribution::finite_scalar({0.0, 1.0}, {0.5, 0.5});
    RngStream rng(1);
    EXPECT_EQ(d.sample(0, rng).size(), 0u);
}

TEST(SampleSpaces, PointMassRepeats) {
    const auto d = Distribution::finite_scalar({4.5}, {1.0});
    RngStream rng(2);
    const PointSet s = d.sample(3, rng);
    ASSERT_EQ(s.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(s[i][0], 4.5);
}

TEST(SampleSpaces, CubeUniformMean) {
    const auto d = Distribution::cube_uniform(2);
    RngStream rng(3);
    const std::size_t n = 100000;
    const PointSet s = d.sample(n, rng);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += s[i][0];
    m /= static_cast<double>(n);
    EXPECT_LT(std::abs(m - 0.5), 3.0 * (1.0 / std::sqrt(12.0)) / std::sqrt(static_cast<double>(n)));
}

TEST(SampleSpaces, FiniteFrequenciesWithinFourSe) {
    const std::vector<double> w{0.1, 0.6, 0.3};
    const auto d = Distribution::finite_scalar({0.0, 1.0, 2.0}, w);
    RngStream rng(4);
    const std::size_t n = 100000;
    std::vector<double> count(3, 0.0);
    for (std::size_t i = 0; i < n; ++i) count[d.sample_atom(rng)] += 1.0;
    for (std::size_t a = 0; a < 3; ++a) {
        const double se = std::sqrt(w[a] * (1.0 - w[a]) / static_cast<double>(n));
        EXPECT_LT(std::abs(count[a] / static_cast<double>(n) - w[a]), 4.0 * se);
    }
}

TEST(SampleSpaces, SamplingIsDeterministicPerStream) {
    const auto d = Distribution::cube_uniform(3);
    RngStream a(99, 5), b(99, 5), c(99, 6);
    const PointSet x = d.sample(50, a), y = d.sample(50, b), z = d.sample(50, c);
    EXPECT_EQ(x.coords(), y.coords());
    EXPECT_NE(x.coords(), z.coords());
}

TEST(SampleSpaces, ExactExpectTotalMass) {
    const auto d = Distribution::finite_scalar({0.0, 1.0, 5.0}, {0.2, 0.3, 0.5});
    EXPECT_NEAR(exact_expect(d, 2, [](std::span<const PointView>) { return 1.0; }), 1.0, 1e-15);
}

TEST(SampleSpaces, ExactExpectSymmetric) {
    const auto d = Distribution::finite_scalar({-1.0, 1.0}, {0.5, 0.5});
    EXPECT_NEAR(exact_expect(d, 1, [](std::span<const PointView> x) { return x[0][0]; }), 0.0, 1e-15);
}

TEST(SampleSpaces, ExactExpectProduct) {
    const auto d = Distribution::finite_scalar({0.0, 1.0}, {0.5, 0.5});
    EXPECT_NEAR(exact_expect(d, 2, [](std::span<const PointView> x) { return x[0][0] * x[1][0]; }), 0.25, 1e-15);
}

TEST(SampleSpaces, ExactExpectPointMassAndLinearity) {
    const auto pm = Distribution::finite_scalar({2.0}, {1.0});
    auto f = [](std::span<const PointView> x) { return x[0][0] * x[1][0] + 3.0 * x[0][0]; };
    EXPECT_NEAR(exact_expect(pm, 2, f), 10.0, 1e-15);
    const auto d = Distribution::finite_scalar({0.0, 1.0, 3.0}, {0.2, 0.3, 0.5});
    auto g = [](std::span<const PointView> x) { return x[0][0] - x[1][0] * x[1][0]; };
    const double lhs = exact_expect(d, 2, [&](std::span<const PointView> x) { return 2.0 * f(x) - g(x); });
    EXPECT_NEAR(lhs, 2.0 * exact_expect(d, 2, f) - exact_expect(d, 2, g), 1e-12);
}

TEST(SampleSpaces, EnumerationGuardRefuses) {
    std::vector<double> v(100), w(100, 0.01);
    for (std::size_t i = 0; i < 100; ++i) v[i] = static_cast<double>(i);
    const auto d = Distribution::finite_scalar(v, w);
    EXPECT_THROW(exact_expect(d, 4, [](std::span<const PointView>) { return 1.0; }), BudgetExceeded);
}

TEST(SampleSpaces, InvalidWeightsRefused) {
    EXPECT_THROW(Distribution::finite_scalar({0.0, 1.0}, {0.7, 0.7}), Refusal);
    EXPECT_THROW(Distribution::finite_scalar({0.0, 1.0}, {1.2, -0.2}), Refusal);
}

TEST(SampleSpaces, DensityRejectionSamplerMean) {
    const double a = 0.5;
    const auto d = Distribution::density(Box{{0.0}, {1.0}}, [a](PointView x) { return 1.0 + a * std::cos(2.0 * M_PI * x[0]); },
                                         1.0 + a);
    RngStream rng(5);
    const std::size_t n = 100000;
    const PointSet s = d.sample(n, rng);
    double m = 0.0, c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        m += s[i][0];
        c += std::cos(2.0 * M_PI * s[i][0]);
    }
    // E cos(2 pi X) = a / 2 under the density 1 + a cos(2 pi x).
    EXPECT_NEAR(m / n, 0.5, 0.01);
    EXPECT_NEAR(c / n, a / 2.0, 0.01);
}
