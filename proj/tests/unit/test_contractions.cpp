#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "test_util.hpp"
#include "ustat/contraction.hpp"
#include "ustat/errors.hpp"

using namespace ustat;
using namespace ustat::testing;

TEST(Contractions, FullContractionIsSquaredNorm) {
    RngStream rng(21);
    const auto w = random_weights(3, rng);
    const Table t = random_symmetric(3, 2, rng);
    const Table c = contract_exact(t, t, {2, 2, 2, 2}, w);
    ASSERT_EQ(c.order(), 0u);
    EXPECT_NEAR(c[0], table_inner(t, t, w), 1e-12);
}

TEST(Contractions, ZeroIntegrationIsSquare) {
    RngStream rng(22);
    const auto w = random_weights(3, rng);
    const Table t = random_symmetric(3, 2, rng);
    const Table c = contract_exact(t, t, {2, 0, 2, 2}, w);
    ASSERT_EQ(c.order(), 2u);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(c[i], t[i] * t[i], 1e-12);
}

TEST(Contractions, TwoAtomSecondMoment) {
    const auto d = Distribution::finite_scalar({-1.0, 1.0}, {0.5, 0.5});
    const Kernel x = kernels::sum(1);
    const Kernel c = contract(x, x, {1, 1, 1, 1}, d, EvalMode::exact(), 10);
    EXPECT_NEAR(c({}, 10), 1.0, 1e-15);
}

TEST(Contractions, NormOfFullContraction) {
    RngStream rng(23);
    const auto w = random_weights(4, rng);
    const auto d = index_space(w);
    const Table t = random_symmetric(4, 2, rng);
    const Kernel k = t.as_kernel(d, "t");
    const NormEstimate e = contraction_norm(k, k, {2, 2, 2, 2}, d, EvalMode::exact(), 10);
    EXPECT_NEAR(e.value, table_inner(t, t, w), 1e-12);
}

TEST(Contractions, CauchySchwarzItem) {
    RngStream rng(24);
    for (int rep = 0; rep < 10; ++rep) {
        const auto w = random_weights(3, rng);
        const Table a = random_symmetric(3, 2, rng), b = random_symmetric(3, 3, rng);
        for (std::size_t r = 1; r <= 2; ++r)
            EXPECT_LE(contraction_norm_exact(a, b, {r, r, 2, 3}, w), table_norm(a, w) * table_norm(b, w) + 1e-12);
    }
}

TEST(Contractions, ExactNormsMatchEnumeration) {
    RngStream rng(25);
    const auto w = random_weights(3, rng);
    const auto d = index_space(w);
    const Table a = random_symmetric(3, 2, rng), b = random_symmetric(3, 2, rng);
    for (std::size_t r = 0; r <= 2; ++r)
        for (std::size_t l = 0; l <= r; ++l) {
            if (r == 0 && l == 0) continue;
            const ContractionIndex idx{r, l, 2, 2};
            // Materialised contraction against the streaming norm and a Kernel-level evaluation.
            const Table c = contract_exact(a, b, idx, w);
            const double direct = table_norm(c, w);
            EXPECT_NEAR(contraction_norm_exact(a, b, idx, w), direct, 1e-10);
            const Kernel kc = contract(a.as_kernel(d, "a"), b.as_kernel(d, "b"), idx, d, EvalMode::exact(), 10);
            EXPECT_NEAR(table_norm(Table::tabulate(kc, d, 10), w), direct, 1e-10);
        }
}

TEST(Contractions, SymmetrizeFixedPoint) {
    RngStream rng(26);
    const Table t = random_symmetric(3, 3, rng);
    const Table s = symmetrize(t);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(s[i], t[i], 1e-14);
}

TEST(Contractions, SymmetrizeFirstCoordinate) {
    const Kernel f{"x", 2, false, [](std::span<const PointView> x, std::size_t) { return x[0][0]; }};
    const Kernel s = symmetrize(f);
    std::array<double, 1> a{2.0}, b{5.0};
    std::array<PointView, 2> args{PointView(a), PointView(b)};
    EXPECT_DOUBLE_EQ(s(args, 1), 3.5);
}

TEST(Contractions, SymmetrizeContractsNorm) {
    RngStream rng(27);
    const auto w = random_weights(3, rng);
    for (int rep = 0; rep < 10; ++rep) {
        const Table f = random_table(3, 3, rng);
        EXPECT_LE(table_norm(symmetrize(f), w), table_norm(f, w) + 1e-12);
    }
}

TEST(Contractions, InvalidIndexRefused) {
    RngStream rng(28);
    const auto w = random_weights(2, rng);
    const Table a = random_symmetric(2, 2, rng);
    EXPECT_THROW(contract_exact(a, a, {1, 2, 2, 2}, w), Refusal);
    EXPECT_THROW(contract_exact(a, a, {3, 0, 2, 2}, w), Refusal);
}

TEST(Contractions, MonteCarloNormNearExact) {
    RngStream rng(29);
    const auto w = random_weights(3, rng);
    const auto d = index_space(w);
    const Table a = random_symmetric(3, 2, rng);
    const Kernel k = a.as_kernel(d, "a");
    const double ex = contraction_norm_exact(a, a, {1, 1, 2, 2}, w);
    const NormEstimate mc = contraction_norm(k, k, {1, 1, 2, 2}, d, EvalMode::monte_carlo(2000, 5), 10);
    EXPECT_NEAR(mc.value, ex, std::max(5.0 * mc.se, 0.05 * ex));
}
