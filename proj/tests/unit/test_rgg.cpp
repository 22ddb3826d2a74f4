#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "ustat/errors.hpp"
#include "ustat/rgg.hpp"

using namespace ustat;

namespace {

PointSet line(std::vector<double> x) { return PointSet(1, std::move(x)); }

std::vector<double> steps(std::size_t n) {
    std::vector<double> g;
    for (std::size_t j = 1; j <= n; ++j) g.push_back(static_cast<double>(j) / static_cast<double>(n));
    return g;
}

}  // namespace

TEST(Motif, CanonicalCodes) {
    const MotifPattern path1 = MotifPattern::from_edges(3, {{0, 1}, {1, 2}});
    const MotifPattern path2 = MotifPattern::from_edges(3, {{0, 2}, {2, 1}});
    EXPECT_EQ(path1.code(), path2.code());
    const MotifPattern tri = MotifPattern::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
    EXPECT_NE(tri.code(), path1.code());
    EXPECT_EQ(tri.edge_count(), 3u);
    EXPECT_THROW(MotifPattern::from_edges(3, {{0, 1}}), Refusal);
}

TEST(Motif, IndicatorIsInduced) {
    const PointSet pts = line({0.0, 0.1, 0.2});
    const std::array<PointView, 3> a{pts[0], pts[1], pts[2]};
    const MotifPattern path = MotifPattern::from_edges(3, {{0, 1}, {1, 2}});
    const MotifPattern tri = MotifPattern::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
    EXPECT_TRUE(motif_indicator(path, a, 0.15));
    EXPECT_FALSE(motif_indicator(tri, a, 0.15));
    EXPECT_TRUE(motif_indicator(tri, a, 0.25));
    EXPECT_FALSE(motif_indicator(path, a, 0.25));
}

TEST(Motif, CoincidentPointsAreNotAdjacent) {
    const PointSet pts = line({0.5, 0.5});
    const std::array<PointView, 2> a{pts[0], pts[1]};
    EXPECT_FALSE(motif_indicator(MotifPattern::edge(), a, 0.1));
}

TEST(Graph, SequentialMatchesBruteForce) {
    RngStream rng(71);
    const PointSet pts = Distribution::cube_uniform(2).sample(60, rng);
    const GeometricGraph g = build_graph(pts, 0.2);
    for (const auto& motif : {MotifPattern::edge(), MotifPattern::from_edges(3, {{0, 1}, {1, 2}}),
                              MotifPattern::from_edges(3, {{0, 1}, {1, 2}, {0, 2}})}) {
        const auto path = count_motifs_sequential(g, motif, {1.0});
        EXPECT_DOUBLE_EQ(path.values.back(), count_motifs_bruteforce(g, motif));
    }
    EXPECT_EQ(static_cast<double>(g.edge_count()), count_motifs_bruteforce(g, MotifPattern::edge()));
}

TEST(Graph, PrefixCounts) {
    const GeometricGraph g = build_graph(line({0.0, 0.05, 0.5, 0.52, 0.9}), 0.1);
    const auto path = count_motifs_sequential(g, MotifPattern::edge(), steps(5));
    EXPECT_EQ(path.values, (std::vector<double>{0, 1, 1, 2, 2}));
}

TEST(Constants, EdgeOnUniformSquare) {
    RngStream rng(72);
    const MotifConstants c = estimate_dk_nu(Distribution::cube_uniform(2), MotifPattern::edge(), 20000, rng);
    EXPECT_NEAR(c.nu, M_PI, 4.0 * c.nu_se + 1e-9);
    EXPECT_NEAR(c.dk[0], c.nu * c.nu, 1e-6 * c.dk[0] + 4.0 * c.dk_se[0]);
    EXPECT_NEAR(c.dk[1], M_PI, 4.0 * c.dk_se[1] + 1e-9);
    EXPECT_NEAR(c.d1_minus_nu2, 0.0, 4.0 * c.d1_minus_nu2_se + 1e-9);
}

TEST(Constants, CaseFormulas) {
    MotifConstants c;
    c.dk = {4.0, 3.0};
    c.d1_minus_nu2 = 1.0;
    EXPECT_DOUBLE_EQ(c1_constant(c, 2), 1.5);
    EXPECT_DOUBLE_EQ(c2_constant(c, 2), 1.5);
    EXPECT_DOUBLE_EQ(c3_constant(c, 2), 1.0);
    EXPECT_DOUBLE_EQ(c4_constant(c, 2, 2.0), 4.0 * 1.0 + 2.0 * 1.5);
}

TEST(Regime, Classification) {
    const std::vector<std::size_t> g{1000, 2000, 4000, 8000};
    EXPECT_EQ(classify_regime(g, power_radius(1.0, 1.5), 1, 2, true).rcase, RggCase::C1);
    EXPECT_EQ(classify_regime(g, power_radius(1.0, 0.75), 1, 2, true).rcase, RggCase::C2);
    EXPECT_EQ(classify_regime(g, power_radius(1.0, 0.75), 1, 2, false).rcase, RggCase::C3);
    const RegimeParams c4 = classify_regime(g, power_radius(0.5, 1.0), 1, 2, true);
    EXPECT_EQ(c4.rcase, RggCase::C4);
    EXPECT_NEAR(c4.rho, 0.5, 1e-12);
    EXPECT_THROW(classify_regime(g, power_radius(1.0, 3.0), 1, 2, true), Refusal);
}

TEST(Regime, LimitCovariances) {
    RggCovParams c1;
    c1.p = 2;
    EXPECT_DOUBLE_EQ(limit_cov_rgg(c1, 0.5, 1.0), 0.25);
    RggCovParams c4;
    c4.rcase = RggCase::C4;
    c4.p = 2;
    c4.rho = 1.3;
    c4.dk = {5.0, 2.0};
    c4.nu = 1.0;
    EXPECT_NEAR(limit_cov_rgg(c4, 1.0, 1.0), 1.0, 1e-14);
}

TEST(EdgeKernel, ExactProbabilities) {
    EXPECT_NEAR(edge_probability_unit_cube(1, 0.1), 2 * 0.1 - 0.01, 1e-14);
    EXPECT_NEAR(edge_probability_unit_cube(2, 0.1), M_PI * 0.01 - 8.0 / 3.0 * 0.001 + 0.5 * 1e-4, 1e-14);
    EXPECT_NEAR(edge_g1_unit_square(0.5, 0.5, 0.1), M_PI * 0.01, 1e-9);
    EXPECT_NEAR(edge_g1_unit_square(0.0, 0.0, 0.1), M_PI * 0.01 / 4.0, 1e-9);
}

TEST(EdgeKernel, VarianceOfG1) {
    const double r = 0.1;
    EXPECT_NEAR(edge_var_g1_unit_cube(1, r), 2.0 * r * r * r / 3.0 - r * r * r * r, 1e-15);
    // Direct quadrature of g1^2 on a midpoint grid.
    const std::size_t m = 200;
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double g = edge_g1_unit_square((i + 0.5) / m, (j + 0.5) / m, r);
            s += g * g;
        }
    s /= static_cast<double>(m * m);
    const double g0 = edge_probability_unit_cube(2, r);
    EXPECT_NEAR(edge_var_g1_unit_cube(2, r) / (s - g0 * g0), 1.0, 5e-3);
}

TEST(EdgeChangepoint, MatchesDirectCount) {
    RngStream rng(73);
    const PointSet pts = Distribution::cube_uniform(1).sample(40, rng);
    const GeometricGraph g = build_graph(pts, 0.05);
    const double eta = 0.09, sigma2 = 4.0;
    const auto grid = steps(40);
    const EdgeChangepoint e = changepoint_edge_stat(g, eta, sigma2, grid);
    double best = -1e300;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const std::size_t k = gi + 1;
        double cross = 0.0;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = k; j < 40; ++j) {
                const double dd = std::abs(pts[i][0] - pts[j][0]);
                cross += (dd > 0.0 && dd < 0.05) ? 1.0 : 0.0;
            }
        const double v = (cross - eta * k * (40.0 - k)) / 2.0;
        EXPECT_NEAR(e.path.values[gi], v, 1e-12);
        best = std::max(best, -v);
    }
    EXPECT_NEAR(e.max_neg, best, 1e-12);
    EXPECT_DOUBLE_EQ(e.path.values.back(), 0.0);
    EXPECT_THROW(changepoint_edge_stat(g, eta, 0.0, grid), Refusal);
}
