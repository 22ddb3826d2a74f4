#include <gtest/gtest.h>

#include <cmath>

#include "ustat/diag_dominant.hpp"
#include "ustat/errors.hpp"

using namespace ustat;

TEST(Simpson, Polynomial) {
    EXPECT_NEAR(simpson([](double x) { return x * x * x; }, 0.0, 2.0), 4.0, 1e-12);
    EXPECT_NEAR(simpson([](double x) { return std::sin(x); }, 0.0, M_PI), 2.0, 1e-10);
}

TEST(Dirichlet, PointValues) {
    EXPECT_NEAR(dirichlet_value(5, 0.0), 11.0 / (2.0 * M_PI), 1e-14);
    EXPECT_NEAR(dirichlet_value(5, 1e-9), 11.0 / (2.0 * M_PI), 1e-9);
    // The Fourier sum at a generic angle.
    double s = 0.5;
    for (int j = 1; j <= 5; ++j) s += std::cos(j * 0.7);
    EXPECT_NEAR(dirichlet_value(5, 0.7), s / M_PI, 1e-13);
}

TEST(Dirichlet, Integrals) {
    EXPECT_NEAR(dirichlet_integral(7, -M_PI, M_PI), 1.0, 1e-14);
    EXPECT_NEAR(dirichlet_integral(7, 0.2, 1.1),
                simpson([](double u) { return dirichlet_value(7, u); }, 0.2, 1.1), 1e-10);
    const double sq = simpson([](double u) { return dirichlet_value(6, u) * dirichlet_value(6, u); }, -M_PI, M_PI);
    EXPECT_NEAR(sq, 13.0 / (2.0 * M_PI), 1e-9);
}

TEST(Dirichlet, KernelIsSymmetric) {
    const Kernel k = dirichlet_kernel(4);
    std::array<double, 1> a{0.3}, b{-2.0};
    std::array<PointView, 2> ab{PointView(a), PointView(b)}, ba{PointView(b), PointView(a)};
    EXPECT_NEAR(k(ab, 10), k(ba, 10), 1e-14);
    EXPECT_NEAR(k(ab, 10), dirichlet_value(4, 2.3), 1e-13);
}

TEST(Haar, BasisSumAgrees) {
    for (std::size_t I : {0u, 1u, 3u, 5u})
        for (double x : {0.01, 0.3, 0.5, 0.77, 0.99})
            for (double y : {0.02, 0.31, 0.49, 0.8})
                EXPECT_NEAR(haar_value(I, x, y), haar_value_by_basis(I, x, y), 1e-12) << I << " " << x << " " << y;
}

TEST(Haar, RowsIntegrateToOne) {
    for (double x : {0.1, 0.6, 0.95}) {
        const double row = simpson([x](double y) { return haar_value(4, x, y); }, 0.0, 1.0, 4096);
        EXPECT_NEAR(row, 1.0, 1e-3);
    }
    EXPECT_DOUBLE_EQ(haar_value(3, 0.1, 0.11), 8.0);
    EXPECT_DOUBLE_EQ(haar_value(3, 0.1, 0.3), 0.0);
}

TEST(Family, ParametersGrow) {
    DiagFamily d;
    EXPECT_LT(d.param(64), d.param(256));
    EXPECT_DOUBLE_EQ(d.kn_nominal(64), 2.0 * d.param(64) + 1.0);
    DiagFamily h;
    h.kind = DiagFamily::Kind::haar;
    EXPECT_DOUBLE_EQ(h.kn_nominal(64), std::pow(2.0, static_cast<double>(h.param(64))));
    h.haar_density_amp = 1.5;
    EXPECT_THROW(h.distribution(), Refusal);
}

TEST(Quantities, DirichletSecondMoment) {
    DiagFamily d;
    const DiagQuantities q = diag_quantities(d, 64);
    // Uniform angles: E D_k(X - Y)^2 = (2k+1) / (4 pi^2).
    EXPECT_NEAR(q.kn, (2.0 * q.param + 1.0) / (4.0 * M_PI * M_PI), 1e-6 * q.kn);
    EXPECT_NEAR(q.op_norm, 1.0 / (2.0 * M_PI), 1e-12);
    EXPECT_GT(q.diag_mass, 0.0);
    EXPECT_LE(q.diag_mass, 1.0 + 1e-9);
    EXPECT_GT(q.sigma2, 0.0);
}

TEST(Conditions, DirichletTrendsHold) {
    const DiagReport r = check_vdv_conditions(DiagFamily{}, {64, 128, 256});
    for (const auto& [name, ok] : r.trends) EXPECT_TRUE(ok) << name;
    EXPECT_TRUE(r.all_pass);
    EXPECT_GT(r.rows.back().sigma_ratio, 0.98);
    EXPECT_LT(r.rows.back().sigma_ratio, 1.02);
}

TEST(Conditions, HaarTrendsHold) {
    DiagFamily h;
    h.kind = DiagFamily::Kind::haar;
    const DiagReport r = check_vdv_conditions(h, {16, 64, 256});
    for (const auto& [name, ok] : r.trends) EXPECT_TRUE(ok) << name;
}

TEST(Conditions, NLogNControlFails) {
    DiagFamily d;
    d.kn_nlogn = true;
    const DiagReport r = check_fvdv_extra(d, {64, 128, 256});
    EXPECT_FALSE(r.trends.at("e8_bounded"));
    EXPECT_FALSE(r.all_pass);
}

TEST(Conditions, PowerWindowPassesExtras) {
    const DiagReport r = check_fvdv_extra(DiagFamily{}, {64, 128, 256});
    for (const auto& [name, ok] : r.trends) EXPECT_TRUE(ok) << name;
}

TEST(Run, VarianceAtOneNearUnity) {
    const std::vector<double> grid{0.5, 1.0};
    const DiagRun run = run_diag_fclt(DiagFamily{}, 64, 400, grid, RngStream(81), 2);
    double m = 0.0, v = 0.0;
    for (const auto& p : run.paths) m += p[1];
    m /= 400.0;
    for (const auto& p : run.paths) v += (p[1] - m) * (p[1] - m);
    v /= 399.0;
    EXPECT_NEAR(m, 0.0, 0.25);
    EXPECT_NEAR(v, 1.0, 0.25);
}
