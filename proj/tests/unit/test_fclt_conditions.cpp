#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "test_util.hpp"
#include "ustat/errors.hpp"
#include "ustat/fclt_conditions.hpp"

using namespace ustat;
using namespace ustat::testing;

TEST(Quadruples, KnownMember) {
    const QuadrupleSet q = q_set(1, 2, 1, 0, 2);
    EXPECT_NE(std::find(q.members.begin(), q.members.end(), Quad{1, 1, 1, 0}), q.members.end());
    EXPECT_TRUE(q_rules_hold(1, 2, 1, 0, 2, Quad{1, 1, 1, 0}));
}

TEST(Quadruples, DegreeBound) {
    for (int p = 2; p <= 3; ++p)
        for (int i = 1; i <= p; ++i)
            for (int k = i; k <= p; ++k)
                for (int r = 1; r <= i; ++r)
                    for (int l = 0; l <= r; ++l)
                        for (const Quad& m : q_set(i, k, r, l, p).members) EXPECT_LE(m.j + m.m - m.a - m.b, i + k - r - l);
}

TEST(Quadruples, TopLevelForcesIndices) {
    for (int r = 1; r <= 3; ++r)
        for (int l = 0; l < r; ++l)
            for (const Quad& m : q_set(r, r, r, l, 3).members)
                if (m.j == 3 && m.m == 3) {
                    EXPECT_EQ(m.a, r);
                    EXPECT_EQ(m.b, l);
                }
}

TEST(Quadruples, InvalidArgumentsRefused) {
    EXPECT_THROW(q_set(1, 2, 2, 0, 2), Refusal);
    EXPECT_THROW(q_set(1, 2, 1, 2, 2), Refusal);
}

TEST(FitRate, Slopes) {
    const std::vector<std::size_t> g{100, 200, 400, 800, 1600};
    std::vector<double> inv, cst, rt;
    for (auto n : g) {
        inv.push_back(3.0 / n);
        cst.push_back(2.0);
        rt.push_back(5.0 / std::sqrt(static_cast<double>(n)));
    }
    EXPECT_NEAR(fit_rate(g, inv).slope, -1.0, 1e-9);
    EXPECT_NEAR(fit_rate(g, cst).slope, 0.0, 1e-9);
    const RateFit f = fit_rate(g, rt);
    EXPECT_LE(f.lo, -0.5 + 1e-9);
    EXPECT_GE(f.hi, -0.5 - 1e-9);
}

TEST(TheoremI, RemarkChecklistForPairs) {
    const auto d = Distribution::finite_scalar({0.0, 1.0, 2.0}, {0.2, 0.5, 0.3});
    const auto rep = check_theorem_I(kernels::product(2), d, 2, {50, 100, 200, 400}, EvalMode::exact());
    struct Row {
        const char* label;
        CheckKind kind;
        int j, m, a, b;
        double e;
    };
    const Row rows[] = {{"1", CheckKind::vanish, 2, 0, 0, 0, 2.0},  {"2", CheckKind::vanish, 1, 2, 1, 0, 2.0},
                        {"3", CheckKind::vanish, 1, 2, 1, 1, 2.5},  {"4", CheckKind::vanish, 2, 2, 1, 0, 1.5},
                        {"5", CheckKind::vanish, 2, 2, 1, 1, 2.0},  {"6", CheckKind::vanish, 1, 2, 0, 0, 1.5},
                        {"i", CheckKind::bounded, 0, 0, 0, 0, 2.5}, {"ii", CheckKind::bounded, 1, 0, 0, 0, 2.5},
                        {"iii", CheckKind::bounded, 1, 1, 1, 0, 2.5}, {"iv", CheckKind::bounded, 2, 2, 2, 0, 1.0}};
    for (const auto& row : rows) {
        const CheckSeries* c = rep.find_remark(row.label);
        ASSERT_NE(c, nullptr) << row.label;
        EXPECT_EQ(c->kind, row.kind) << row.label;
        const bool same = c->quad.j == row.j && c->quad.m == row.m;
        const bool swapped = c->quad.j == row.m && c->quad.m == row.j;
        EXPECT_TRUE(same || swapped) << row.label;
        EXPECT_EQ(c->quad.a, row.a) << row.label;
        EXPECT_EQ(c->quad.b, row.b) << row.label;
        EXPECT_DOUBLE_EQ(c->exponent, row.e) << row.label;
    }
    EXPECT_EQ(rep.verdict, "pass");
}

TEST(TheoremI, OrderOneCoefficient) {
    const auto d = Distribution::finite_scalar({-1.0, 1.0}, {0.5, 0.5});
    const auto rep = check_theorem_I(kernels::sum(1), d, 1, {10, 20, 40, 80}, EvalMode::exact());
    ASSERT_EQ(rep.b2.size(), 1u);
    EXPECT_NEAR(rep.b2[0], 1.0, 1e-12);
    EXPECT_NEAR(rep.alpha2[0], 1.0, 1e-12);
}

TEST(TheoremII, CoefficientsAgreeWithTheoremI) {
    RngStream rng(31);
    const auto w = random_weights(3, rng);
    const auto d = index_space(w);
    const Kernel k = random_symmetric(3, 2, rng).as_kernel(d, "random");
    const std::vector<std::size_t> g{40, 80, 160, 320};
    const auto r1 = check_theorem_I(k, d, 2, g, EvalMode::exact());
    const auto r2 = check_theorem_II(k, d, 2, g, EvalMode::exact());
    ASSERT_EQ(r1.b2.size(), r2.b2.size());
    for (std::size_t i = 0; i < r1.b2.size(); ++i) EXPECT_NEAR(r1.b2[i], r2.b2[i], 1e-9);
    for (const char* label : {"1", "2", "3", "4", "i", "ii", "iii"}) EXPECT_NE(r2.find_remark(label), nullptr) << label;
}

TEST(TheoremII, DegenerateKernelOnlyTopLevel) {
    const auto d = Distribution::finite_scalar({-1.0, 1.0}, {0.5, 0.5});
    const auto rep = check_theorem_II(kernels::product(2), d, 2, {40, 80, 160}, EvalMode::exact());
    for (const auto& c : rep.checks) {
        if (c.kind == CheckKind::limit) continue;
        if (c.v != 2 || c.u != 2) {
            for (double v : c.values) EXPECT_NEAR(v, 0.0, 1e-13) << c.id;
        }
    }
}

TEST(TheoremII, NormsMatchEnumeration) {
    RngStream rng(32);
    const auto w = random_weights(3, rng);
    const auto d = index_space(w);
    const Table t = random_symmetric(3, 2, rng);
    const Kernel k = t.as_kernel(d, "t");
    const std::vector<std::size_t> g{30, 60, 120};
    const auto rep = check_theorem_II(k, d, 2, g, EvalMode::exact());
    const ExactHoeffding h = exact_hoeffding(t, w);
    // (b') label 3: v=2, u=2, r=1, l=0, exponent 2p - (u+v+r-l)/2 = 1.5.
    const CheckSeries* c = rep.find_remark("3");
    ASSERT_NE(c, nullptr);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double n = static_cast<double>(g[i]);
        const double expect = std::pow(n, 1.5) / rep.sigma2[i] * contraction_norm_exact(h.psi[2], h.psi[2], {1, 0, 2, 2}, w);
        EXPECT_NEAR(c->values[i], expect, 1e-10 * std::max(1.0, expect));
    }
}

TEST(Degenerate, FixedKernelFailsAtOneOne) {
    const auto d = Distribution::finite_scalar({-1.0, 1.0}, {0.5, 0.5});
    const auto rep = check_degenerate(kernels::product(2), d, 2, {64, 128, 256, 512}, EvalMode::exact());
    EXPECT_EQ(rep.verdict, "fail");
    bool found = false;
    for (const auto& c : rep.checks)
        if (c.id == "ratio:r=1,l=1") {
            found = true;
            EXPECT_FALSE(c.pass);
            EXPECT_GT(c.values.back(), 0.0);
            EXPECT_LE(c.fit.lo, 0.0);
            EXPECT_GE(c.fit.hi, 0.0);
        }
    EXPECT_TRUE(found);
}

TEST(Degenerate, OrderOnePasses) {
    const auto d = Distribution::finite_scalar({-1.0, 1.0}, {0.5, 0.5});
    const auto rep = check_degenerate(kernels::sum(1), d, 1, {16, 64, 256, 1024}, EvalMode::exact());
    std::size_t vanish = 0;
    for (const auto& c : rep.checks)
        if (c.kind == CheckKind::vanish) {
            ++vanish;
            EXPECT_EQ(c.r, 1);
            EXPECT_EQ(c.l, 0);
        }
    EXPECT_EQ(vanish, 1u);
    EXPECT_EQ(rep.verdict, "pass");
}

TEST(Degenerate, NonDegenerateRefused) {
    const auto d = Distribution::finite_scalar({0.0, 1.0}, {0.5, 0.5});
    EXPECT_THROW(check_degenerate(kernels::sum(2), d, 2, {10, 20, 40}, EvalMode::exact()), Refusal);
}

TEST(Degenerate, ShrinkingIndicatorPasses) {
    std::vector<double> angles(256);
    for (std::size_t j = 0; j < 256; ++j) angles[j] = -M_PI + 2.0 * M_PI * j / 256.0;
    const auto d = Distribution::finite_uniform(angles);
    const Kernel k = center_kernel(kernels::circle_threshold(power_radius(0.53, 0.5)), d, EvalMode::exact());
    const auto rep = check_degenerate(k, d, 2, {16, 64, 256, 1024}, EvalMode::exact());
    EXPECT_EQ(rep.verdict, "pass");
}

TEST(ContractionBounds, LemmaInequalityHolds) {
    RngStream rng(33);
    for (int rep = 0; rep < 5; ++rep) {
        const auto w = random_weights(3, rng);
        const ExactHoeffding h = exact_hoeffding(random_symmetric(3, 2, rng), w);
        for (const auto& b : contraction_bound_table(h, w)) EXPECT_LE(b.lhs, b.rhs * (1.0 + 1e-10) + 1e-12);
    }
}
