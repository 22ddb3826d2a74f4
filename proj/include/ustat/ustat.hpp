#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ustat/finite_table.hpp"
#include "ustat/kernel.hpp"
#include "ustat/sample_space.hpp"

namespace ustat {

struct EvalMode {
    enum class Kind { exact_finite, monte_carlo };
    Kind kind = Kind::exact_finite;
    std::size_t M = 2000;
    std::uint64_t seed = 0;

    static EvalMode exact() { return {}; }
    static EvalMode monte_carlo(std::size_t M, std::uint64_t seed) {
        return {Kind::monte_carlo, M, seed};
    }
    bool is_exact() const { return kind == Kind::exact_finite; }
};

double binom(double n, double k);
// floor(n t) with a small tolerance so that t = j/n maps to j.
std::size_t prefix_length(std::size_t n, double t);

// Sum of k over all increasing p-tuples of the first `len` points of `sample`.
// When len < p the result is 0 and *short_prefix (if given) is set.
double eval_ustat(const Kernel& k, const PointSet& sample, std::size_t len, std::size_t n_param,
                  bool* short_prefix = nullptr);
inline double eval_ustat(const Kernel& k, const PointSet& sample, std::size_t n_param) {
    return eval_ustat(k, sample, sample.size(), n_param);
}

struct SequentialPath {
    std::size_t n = 0;
    std::vector<double> grid;
    std::vector<double> values;
};

// t_j = j/n for every insertion, thinned to at most max_points (always keeping t = 1).
std::vector<double> default_grid(std::size_t n, std::size_t max_points = 512);
std::vector<double> uniform_grid(std::size_t points);  // {1/points, ..., 1}

// U_n(t) on the prefix of length floor(n t), computed by incremental insertion.
SequentialPath sequential_upath(const Kernel& k, const PointSet& sample, const std::vector<double>& grid,
                                std::size_t n_param);
inline SequentialPath sequential_upath(const Kernel& k, const PointSet& sample, const std::vector<double>& grid) {
    return sequential_upath(k, sample, grid, sample.size());
}

// Exact Hoeffding components on a finite space: g[l] and psi[k] for 0..p.
struct ExactHoeffding {
    std::vector<Table> g;
    std::vector<Table> psi;
};
ExactHoeffding exact_hoeffding(const Table& psi, const std::vector<double>& w);

// g_l as a kernel of order l. Exact mode integrates out p - l coordinates for the
// kernel at sample size n_param; Monte Carlo mode averages M fresh draws per
// evaluation (the draws are keyed by the argument, so the result is a function).
Kernel hoeffding_g(const Kernel& k, const Distribution& dist, std::size_t level, const EvalMode& mode,
                   std::size_t n_param);
Kernel hoeffding_psi(const Kernel& k, const Distribution& dist, std::size_t level, const EvalMode& mode,
                     std::size_t n_param);

struct McValue {
    double mean = 0.0;
    double se = 0.0;
};
// Monte Carlo g_l(y) with its standard error.
McValue mc_g_value(const Kernel& k, const Distribution& dist, std::span<const PointView> y, std::size_t M,
                   RngStream& rng, std::size_t n_param);

struct Sigma2 {
    double via_psi = 0.0;   // sum_k C(n-k,p-k)^2 C(n,k) |psi_k|^2
    double via_g = 0.0;     // C(n,p) sum_k C(p,k) C(n-p,p-k) Var g_k
    double g0 = 0.0;        // E psi
    std::vector<double> var_g;     // index k = 0..p (var_g[0] = 0)
    std::vector<double> psi_norm2; // index k = 0..p (psi_norm2[0] = g0^2)
    bool negative_flag = false;
};
Sigma2 variance_sigma2(const Kernel& k, const Distribution& dist, std::size_t n, const EvalMode& mode);
Sigma2 sigma2_from_components(std::size_t p, std::size_t n, double g0, const std::vector<double>& psi_norm2,
                              const std::vector<double>& var_g);

// W(t) = (U(t) - C(floor(nt), p) g0) / sigma_n.
SequentialPath normalize_path(const SequentialPath& path, std::size_t p, double g0, double sigma2);
SequentialPath normalize_path(const SequentialPath& path, const Kernel& k, const Distribution& dist,
                              const EvalMode& mode);

// max over probe points of |E psi(x_1..x_{p-1}, X)|.
double check_degeneracy(const Kernel& k, const Distribution& dist, const EvalMode& mode, std::size_t n_param,
                        std::size_t probes = 64);

// psi - E psi, with E psi recomputed (and cached) for every sample size.
Kernel center_kernel(const Kernel& k, const Distribution& dist, const EvalMode& mode);

}  // namespace ustat
