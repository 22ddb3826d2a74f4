#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ustat/kernel.hpp"
#include "ustat/sample_space.hpp"
#include "ustat/ustat.hpp"

namespace ustat {

struct ChangepointStat {
    std::size_t n = 0;
    std::vector<double> grid;
    std::vector<double> values;      // Y_n(t)
    double gamma2 = 0.0;             // gamma_n^2 = Var Y_n(1/2)
    std::vector<double> normalized;  // Y_n(t) / gamma_n
};

// Y_n(t) = sum_{i <= floor(nt) < j <= n} psi(X_i, X_j), for a centred kernel.
// With gamma2 > 0 the normalised path is filled in as well.
ChangepointStat ystat_path(const Kernel& k, const PointSet& sample, const std::vector<double>& grid,
                           double gamma2 = 0.0, std::size_t n_param = 0);

// Pieces of Y_n(t) = U_n(1) - U_n(t) - I_n(t), evaluated directly (O(n^2) each).
double inner_tail_sum(const Kernel& k, const PointSet& sample, std::size_t prefix, std::size_t n_param);

// Cov(Y_n(s), Y_n(t)) for s <= t given gamma1^2 = |psi_1|^2 and gamma2^2 = |psi_2|^2.
double ycov_exact(double gamma1_sq, double gamma2_sq, std::size_t n, double s, double t);
// The covariance display as printed, with the (+1) factors. Kept for comparison only.
double ycov_display(double gamma1_sq, double gamma2_sq, std::size_t n, double s, double t);

double limit_mixture_cov(double c1, double c2, double s, double t);

// Returns psi unchanged when |E psi| <= tol at n_param, otherwise the centred kernel.
// `notice` is set when centring was applied.
Kernel ensure_centered(const Kernel& k, const Distribution& dist, const EvalMode& mode, std::size_t n_param,
                       double tol, std::string* notice);

struct CTrend {
    std::vector<std::size_t> n_grid;
    std::vector<double> gamma1_sq, gamma2_sq, gamma_n_sq;
    std::vector<double> c1_sq, c2_sq;
    std::vector<double> consistency;     // gamma_n^2 (c1^2 + c2^2) / (n^3 g1^2 + n^2 g2^2)
    std::vector<double> gamma_over_n3;   // gamma_n^2 / (gamma1^2 n^3)
    double c1_sq_limit = 0.0, c2_sq_limit = 0.0;
    bool c2_to_zero = false;
    bool c1_to_zero = false;
};

CTrend estimate_c(const Kernel& k, const Distribution& dist, const std::vector<std::size_t>& n_grid,
                  const EvalMode& mode);

}  // namespace ustat
