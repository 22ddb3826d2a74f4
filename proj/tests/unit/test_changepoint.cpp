#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "test_util.hpp"
#include "ustat/changepoint.hpp"
#include "ustat/errors.hpp"

using namespace ustat;
using namespace ustat::testing;

namespace {

double pair(const Kernel& k, const PointSet& s, std::size_t i, std::size_t j, std::size_t n) {
    std::array<PointView, 2> a{s[i], s[j]};
    return k(a, n);
}

}  // namespace

TEST(Ystat, EndpointsVanish) {
    const PointSet s(1, {0.3, -1.2, 0.8, 2.0, -0.4});
    const auto y = ystat_path(kernels::product(2), s, {0.0, 1.0});
    EXPECT_DOUBLE_EQ(y.values[0], 0.0);
    EXPECT_NEAR(y.values[1], 0.0, 1e-14);
}

TEST(Ystat, ThreePoints) {
    const PointSet s(1, {1.0, 2.0, 3.0});
    const Kernel k = kernels::product(2);
    const auto y = ystat_path(k, s, {1.0 / 3.0, 2.0 / 3.0});
    EXPECT_DOUBLE_EQ(y.values[0], 2.0 + 3.0);
    EXPECT_DOUBLE_EQ(y.values[1], 3.0 + 6.0);
}

TEST(Ystat, Decomposition) {
    RngStream rng(61);
    const PointSet s = Distribution::cube_uniform(1).sample(17, rng);
    const Kernel k = kernels::product(2);
    std::vector<double> grid;
    for (std::size_t j = 0; j <= 17; ++j) grid.push_back(static_cast<double>(j) / 17.0);
    const auto y = ystat_path(k, s, grid);
    const auto u = sequential_upath(k, s, grid);
    const double total = eval_ustat(k, s, 17);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const std::size_t a = prefix_length(17, grid[g]);
        EXPECT_NEAR(y.values[g], total - u.values[g] - inner_tail_sum(k, s, a, 17), 1e-10);
        double direct = 0.0;
        for (std::size_t i = 0; i < a; ++i)
            for (std::size_t j = a; j < 17; ++j) direct += pair(k, s, i, j, 17);
        EXPECT_NEAR(y.values[g], direct, 1e-10);
    }
}

TEST(Ystat, NormalisedPath) {
    const PointSet s(1, {1.0, 2.0, 3.0});
    const auto y = ystat_path(kernels::product(2), s, {1.0 / 3.0}, 4.0);
    EXPECT_DOUBLE_EQ(y.normalized[0], 2.5);
}

TEST(Ycov, KnownValues) {
    EXPECT_DOUBLE_EQ(ycov_exact(1.0, 1.0, 4, 0.25, 0.5), 14.0);
    EXPECT_DOUBLE_EQ(ycov_display(1.0, 1.0, 4, 0.25, 0.5), 27.0);
    EXPECT_DOUBLE_EQ(ycov_exact(1.0, 1.0, 4, 0.0, 0.5), 0.0);
    EXPECT_THROW(ycov_exact(1.0, 1.0, 4, 0.75, 0.5), Refusal);
}

TEST(Ycov, MatchesEnumeration) {
    RngStream rng(62);
    const auto w = random_weights(3, rng);
    const auto d = index_space(w);
    Table t = random_symmetric(3, 2, rng);
    const double mean = table_expect(t, w);
    for (auto& v : t.values()) v -= mean;
    const ExactHoeffding h = exact_hoeffding(t, w);
    const double g1 = table_inner(h.psi[1], h.psi[1], w), g2 = table_inner(h.psi[2], h.psi[2], w);
    const Kernel k = t.as_kernel(d, "t");
    const std::size_t n = 4;
    const std::vector<double> grid{0.25, 0.5, 0.75};
    std::vector<double> m1(3, 0.0);
    std::vector<std::vector<double>> m2(3, std::vector<double>(3, 0.0));
    for_each_index_tuple(3, n, [&](std::span<const std::size_t> x) {
        double pr = 1.0;
        std::vector<double> c;
        for (std::size_t i : x) {
            pr *= w[i];
            c.push_back(static_cast<double>(i));
        }
        const auto y = ystat_path(k, PointSet(1, c), grid);
        for (std::size_t a = 0; a < 3; ++a) {
            m1[a] += pr * y.values[a];
            for (std::size_t b = 0; b < 3; ++b) m2[a][b] += pr * y.values[a] * y.values[b];
        }
    });
    for (std::size_t a = 0; a < 3; ++a) {
        EXPECT_NEAR(m1[a], 0.0, 1e-12);
        for (std::size_t b = a; b < 3; ++b)
            EXPECT_NEAR(m2[a][b], ycov_exact(g1, g2, n, grid[a], grid[b]), 1e-10);
    }
}

TEST(Ycov, MixtureLimit) {
    EXPECT_NEAR(limit_mixture_cov(1.0, 0.0, 0.5, 0.5), 0.25, 1e-15);
    EXPECT_NEAR(limit_mixture_cov(0.0, 2.0, 0.25, 0.5), 0.5, 1e-15);
}

TEST(Centering, AppliedOnlyWhenNeeded) {
    const auto d = Distribution::finite_scalar({-1.0, 1.0}, {0.5, 0.5});
    std::string notice;
    const Kernel same = ensure_centered(kernels::product(2), d, EvalMode::exact(), 10, 1e-12, &notice);
    EXPECT_TRUE(notice.empty());
    EXPECT_EQ(same.name, kernels::product(2).name);
    const Kernel c = ensure_centered(kernels::constant(2, 3.0), d, EvalMode::exact(), 10, 1e-12, &notice);
    EXPECT_FALSE(notice.empty());
    std::array<double, 1> a{1.0};
    std::array<PointView, 2> args{PointView(a), PointView(a)};
    EXPECT_NEAR(c(args, 10), 0.0, 1e-14);
}

TEST(Trend, NonDegenerateKernelLosesBridgePart) {
    const auto d = Distribution::finite_scalar({0.0, 1.0}, {0.5, 0.5});
    std::string notice;
    const Kernel k = ensure_centered(kernels::product(2), d, EvalMode::exact(), 10, 1e-12, &notice);
    const CTrend tr = estimate_c(k, d, {50, 100, 200, 400, 800}, EvalMode::exact());
    EXPECT_TRUE(tr.c2_to_zero);
    EXPECT_FALSE(tr.c1_to_zero);
    EXPECT_NEAR(tr.c1_sq_limit, 4.0, 0.05);
    for (double c : tr.consistency) EXPECT_NEAR(c, 1.0, 1e-12);
}

TEST(Trend, DegenerateKernelIsBridge) {
    const auto d = Distribution::finite_scalar({-1.0, 1.0}, {0.5, 0.5});
    const CTrend tr = estimate_c(kernels::product(2), d, {50, 100, 200}, EvalMode::exact());
    EXPECT_TRUE(tr.c1_to_zero);
    EXPECT_NEAR(tr.c2_sq_limit, 4.0, 1e-12);
}
