#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "test_util.hpp"
#include "ustat/errors.hpp"
#include "ustat/ustat.hpp"

using namespace ustat;
using namespace ustat::testing;

namespace {

PointSet scalars(std::vector<double> v) { return PointSet(1, std::move(v)); }

double at1(const Kernel& k, double x, std::size_t n = 10) {
    std::array<double, 1> a{x};
    std::array<PointView, 1> args{PointView(a)};
    return k(args, n);
}

}  // namespace

TEST(UstatCore, EvalPlainSum) { EXPECT_DOUBLE_EQ(eval_ustat(kernels::sum(1), scalars({1, 2, 3}), 3), 6.0); }

TEST(UstatCore, EvalConstantCountsPairs) {
    EXPECT_DOUBLE_EQ(eval_ustat(kernels::constant(2, 1.0), scalars({0, 0, 0, 0, 0}), 5), 10.0);
}

TEST(UstatCore, EvalProductPairs) { EXPECT_DOUBLE_EQ(eval_ustat(kernels::product(2), scalars({1, 2, 3}), 3), 11.0); }

TEST(UstatCore, ShortPrefixFlag) {
    bool short_prefix = false;
    EXPECT_DOUBLE_EQ(eval_ustat(kernels::product(3), scalars({1, 2}), 2, 2, &short_prefix), 0.0);
    EXPECT_TRUE(short_prefix);
}

TEST(UstatCore, SequentialRunningSum) {
    const auto path = sequential_upath(kernels::sum(1), scalars({1, 1, 1, 1}), {0.25, 0.5, 0.75, 1.0});
    EXPECT_EQ(path.values, (std::vector<double>{1, 2, 3, 4}));
}

TEST(UstatCore, SequentialConstantPairs) {
    const auto path = sequential_upath(kernels::constant(2, 1.0), scalars({0, 0, 0, 0}), {0.5, 1.0});
    EXPECT_EQ(path.values, (std::vector<double>{1, 6}));
}

TEST(UstatCore, SequentialMatchesRecomputation) {
    RngStream rng(11);
    const auto d = Distribution::cube_uniform(1);
    const PointSet s = d.sample(40, rng);
    for (std::size_t p : {2u, 3u}) {
        const Kernel k = kernels::product(p);
        const auto grid = default_grid(40);
        const auto path = sequential_upath(k, s, grid);
        EXPECT_NEAR(path.values.back(), eval_ustat(k, s, 40), 1e-10);
        for (std::size_t i = 0; i < grid.size(); i += 7)
            EXPECT_NEAR(path.values[i], eval_ustat(k, s, prefix_length(40, grid[i]), 40), 1e-10);
    }
}

TEST(UstatCore, DefaultGridEndsAtOne) {
    const auto g = default_grid(1024, 512);
    EXPECT_LE(g.size(), 512u);
    EXPECT_DOUBLE_EQ(g.back(), 1.0);
    EXPECT_TRUE(std::find(g.begin(), g.end(), 31.0 / 32.0) != g.end());
}

TEST(UstatCore, HoeffdingProductKernel) {
    const auto d = Distribution::finite_scalar({1.0, 2.0, 4.0}, {0.5, 0.25, 0.25});
    const double m = 0.5 + 0.5 + 1.0;
    const Kernel k = kernels::product(2);
    const Kernel g1 = hoeffding_g(k, d, 1, EvalMode::exact(), 10);
    const Kernel g0 = hoeffding_g(k, d, 0, EvalMode::exact(), 10);
    for (double x : {1.0, 2.0, 4.0}) EXPECT_NEAR(at1(g1, x), m * x, 1e-12);
    EXPECT_NEAR(g0({}, 10), m * m, 1e-12);
}

TEST(UstatCore, HoeffdingTopLevelIsKernel) {
    const auto d = Distribution::finite_scalar({0.0, 1.0}, {0.3, 0.7});
    const Kernel k = kernels::indicator_match(2);
    const Kernel g2 = hoeffding_g(k, d, 2, EvalMode::exact(), 10);
    std::array<double, 1> a{0.0}, b{1.0};
    std::array<PointView, 2> args{PointView(a), PointView(b)};
    EXPECT_DOUBLE_EQ(g2(args, 10), k(args, 10));
}

TEST(UstatCore, HoeffdingIndicatorTwoAtoms) {
    const auto d = Distribution::finite_scalar({0.0, 1.0}, {0.5, 0.5});
    const Kernel k = kernels::indicator_match(2);
    EXPECT_NEAR(at1(hoeffding_g(k, d, 1, EvalMode::exact(), 10), 0.0), 0.5, 1e-15);
    EXPECT_NEAR(hoeffding_g(k, d, 0, EvalMode::exact(), 10)({}, 10), 0.5, 1e-15);
}

TEST(UstatCore, PsiOneIsCenteredG1) {
    const auto d = Distribution::finite_scalar({0.0, 1.0, 3.0}, {0.2, 0.5, 0.3});
    const Kernel k = kernels::sum(2);
    const Kernel g1 = hoeffding_g(k, d, 1, EvalMode::exact(), 10);
    const Kernel psi1 = hoeffding_psi(k, d, 1, EvalMode::exact(), 10);
    const double g0 = hoeffding_g(k, d, 0, EvalMode::exact(), 10)({}, 10);
    for (double x : {0.0, 1.0, 3.0}) EXPECT_NEAR(at1(psi1, x), at1(g1, x) - g0, 1e-12);
}

TEST(UstatCore, CenteredProductIsDegenerate) {
    const auto d = Distribution::finite_scalar({-1.0, 1.0}, {0.5, 0.5});
    const Kernel k = kernels::product(2);
    const Kernel psi1 = hoeffding_psi(k, d, 1, EvalMode::exact(), 10);
    for (double x : {-1.0, 1.0}) EXPECT_NEAR(at1(psi1, x), 0.0, 1e-15);
    EXPECT_NEAR(check_degeneracy(k, d, EvalMode::exact(), 10), 0.0, 1e-15);
}

TEST(UstatCore, PsiComponentsCancel) {
    RngStream rng(12);
    const auto w = random_weights(3, rng);
    const Table t = random_symmetric(3, 3, rng);
    const ExactHoeffding h = exact_hoeffding(t, w);
    for (std::size_t k = 1; k <= 3; ++k) {
        const Table m = integrate_last(h.psi[k], w, 1);
        for (double v : m.values()) EXPECT_NEAR(v, 0.0, 1e-12);
    }
}

TEST(UstatCore, HoeffdingIdentityPointwise) {
    RngStream rng(13);
    const auto w = random_weights(3, rng);
    const Table t = random_symmetric(3, 2, rng);
    const ExactHoeffding h = exact_hoeffding(t, w);
    const std::size_t n = 5;
    for_each_index_tuple(3, n, [&](std::span<const std::size_t> x) {
        double direct = 0.0, decomposed = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) direct += t.at(std::array<std::size_t, 2>{x[i], x[j]});
        decomposed += binom(n, 2) * h.psi[0][0];
        for (std::size_t i = 0; i < n; ++i) decomposed += binom(n - 1, 1) * h.psi[1].at(std::array<std::size_t, 1>{x[i]});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) decomposed += h.psi[2].at(std::array<std::size_t, 2>{x[i], x[j]});
        EXPECT_NEAR(direct, decomposed, 1e-10);
    });
}

TEST(UstatCore, SigmaTwoOrderOne) {
    const auto d = Distribution::finite_scalar({0.0, 1.0}, {0.3, 0.7});
    const Sigma2 s = variance_sigma2(kernels::sum(1), d, 9, EvalMode::exact());
    EXPECT_NEAR(s.via_g, 9 * 0.21, 1e-12);
    EXPECT_NEAR(s.via_psi, 9 * 0.21, 1e-12);
}

TEST(UstatCore, SigmaTwoDegenerate) {
    const auto d = Distribution::finite_scalar({-1.0, 1.0}, {0.5, 0.5});
    const Sigma2 s = variance_sigma2(kernels::product(2), d, 7, EvalMode::exact());
    EXPECT_NEAR(s.via_g, 21.0, 1e-12);
    EXPECT_NEAR(s.via_psi, 21.0, 1e-12);
}

TEST(UstatCore, SigmaTwoMatchesEnumeration) {
    RngStream rng(14);
    const auto w = random_weights(3, rng);
    const auto d = index_space(w);
    const Kernel k = random_symmetric(3, 2, rng).as_kernel(d, "random");
    const std::size_t n = 6;
    const Sigma2 s = variance_sigma2(k, d, n, EvalMode::exact());
    double m1 = 0.0, m2 = 0.0;
    for_each_index_tuple(3, n, [&](std::span<const std::size_t> x) {
        double pr = 1.0;
        std::vector<double> c;
        for (std::size_t i : x) {
            pr *= w[i];
            c.push_back(static_cast<double>(i));
        }
        const double u = eval_ustat(k, PointSet(1, c), n);
        m1 += pr * u;
        m2 += pr * u * u;
    });
    const double var = m2 - m1 * m1;
    EXPECT_NEAR(s.via_g / var, 1.0, 1e-9);
    EXPECT_NEAR(s.via_psi / var, 1.0, 1e-9);
}

TEST(UstatCore, NormalizeRefusesConstantKernel) {
    const auto d = Distribution::finite_scalar({0.0, 1.0}, {0.5, 0.5});
    const SequentialPath p{4, {0.5, 1.0}, {1.0, 6.0}};
    EXPECT_THROW(normalize_path(p, kernels::constant(2, 1.0), d, EvalMode::exact()), Refusal);
}

TEST(UstatCore, NormalizedMeanIsZero) {
    const std::vector<double> w{0.2, 0.5, 0.3};
    const auto d = index_space(w);
    const Kernel k = kernels::sum(2);
    const std::size_t n = 5;
    double mean = 0.0;
    for_each_index_tuple(3, n, [&](std::span<const std::size_t> x) {
        double pr = 1.0;
        std::vector<double> c;
        for (std::size_t i : x) {
            pr *= w[i];
            c.push_back(static_cast<double>(i));
        }
        const auto path = sequential_upath(k, PointSet(1, c), {1.0});
        mean += pr * normalize_path(path, k, d, EvalMode::exact()).values[0];
    });
    EXPECT_NEAR(mean, 0.0, 1e-12);
}

TEST(UstatCore, DegeneracyResidualOfSum) {
    const auto d = Distribution::finite_scalar({0.0, 1.0}, {0.5, 0.5});
    EXPECT_NEAR(check_degeneracy(kernels::sum(2), d, EvalMode::exact(), 10), 1.5, 1e-15);
}

TEST(UstatCore, MonteCarloSigmaTwoClose) {
    const auto d = Distribution::finite_scalar({0.0, 1.0, 2.0}, {0.2, 0.5, 0.3});
    const Kernel k = kernels::product(2);
    const Sigma2 ex = variance_sigma2(k, d, 20, EvalMode::exact());
    const Sigma2 mc = variance_sigma2(k, d, 20, EvalMode::monte_carlo(4000, 3));
    EXPECT_NEAR(mc.via_g / ex.via_g, 1.0, 0.05);
}
