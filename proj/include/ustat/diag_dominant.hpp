#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ustat/kernel.hpp"
#include "ustat/limit_processes.hpp"
#include "ustat/sample_space.hpp"

namespace ustat {

// Composite Simpson on [a, b], starting at min_panels and doubling until two
// successive estimates agree to rel_tol (relative to the larger magnitude).
double simpson(const std::function<double(double)>& f, double a, double b, std::size_t min_panels = 4096,
               double rel_tol = 1e-8, std::size_t max_panels = std::size_t{1} << 22);

// D_k(u) = sin((k + 1/2) u) / (2 pi sin(u / 2)), with the value (2k+1)/(2 pi) at u = 0.
double dirichlet_value(std::size_t k, double u);
// Integral of D_k over [a, b] from the Fourier series.
double dirichlet_integral(std::size_t k, double a, double b);
Kernel dirichlet_kernel(std::size_t k);

// Projection onto span{phi, psi_{i,j} : i < I} on [0, 1]: 2^I on the diagonal
// blocks of the level-I dyadic grid and 0 elsewhere.
double haar_value(std::size_t I, double x, double y);
// Same kernel by summing the Haar basis functions one by one.
double haar_value_by_basis(std::size_t I, double x, double y);
Kernel haar_kernel(std::size_t I);

struct DiagFamily {
    enum class Kind { dirichlet, haar };
    Kind kind = Kind::dirichlet;
    double kn_exponent = 1.5;    // nominal k_n ~ n^kn_exponent
    bool kn_nlogn = false;       // nominal k_n = n log n instead (a failing control)
    double haar_density_amp = 0.0;  // Haar: density 1 + a cos(2 pi x), |a| < 1

    // Family parameter for sample size n: k for Dirichlet, I for Haar.
    std::size_t param(std::size_t n) const;
    // 2k+1 for Dirichlet, 2^I for Haar.
    double kn_nominal(std::size_t n) const;
    Kernel kernel(std::size_t n) const;
    Distribution distribution() const;
    std::string describe() const;
};

struct DiagOptions {
    double eps1 = 0.125;
    double eps2 = 0.125;
    double alpha1 = 0.25;
    double alpha2 = 1.0 / 12.0;
    std::size_t power_iter_cap = 8192;  // largest discretisation for the operator-norm spot check
};

struct PartitionSpec {
    std::vector<double> edges;     // cell boundaries, size M + 1
    std::vector<double> measures;  // mu of each cell
    std::size_t M() const { return measures.size(); }
};

PartitionSpec diag_partition(const DiagFamily& fam, std::size_t n, const DiagOptions& opt);

struct DiagQuantities {
    std::size_t n = 0;
    std::size_t param = 0;
    double kn_nominal = 0.0;
    double kn = 0.0;              // E_mu K_n^2
    double kn_over_n = 0.0;
    std::size_t M = 0;
    double max_measure = 0.0, min_measure = 0.0;
    double diag_mass = 0.0;       // (1/k_n) sum_m int int_{cell^2} K^2
    double max_cell_mass = 0.0;   // (1/k_n) max_m int int_{cell^2} K^2
    double measure_kn_over_n = 0.0;
    double n_min_measure = 0.0;
    double op_norm = 0.0;         // analytic
    double op_norm_numeric = -1.0;  // power iteration (-1 when skipped)
    double sup_over_kn = 0.0;
    double e7 = 0.0, e71a = 0.0, e71b = 0.0, e8 = 0.0, e9 = 0.0;
    double offdiag_mass = 0.0;    // int int K^2 1_{Q^c} d mu^2
    double g0 = 0.0;
    double var_g1 = 0.0;
    double sigma2 = 0.0;
    double sigma_ratio = 0.0;     // 2 sigma_n^2 / (n^2 k_n)
    double var_r_ratio = 0.0;     // Var R_n(1) / sigma_n^2 (off-diagonal part)
};

DiagQuantities diag_quantities(const DiagFamily& fam, std::size_t n, const DiagOptions& opt = {});

struct DiagReport {
    std::vector<DiagQuantities> rows;
    std::map<std::string, bool> trends;  // quantity -> predicted trend observed
    bool all_pass = true;
};

// The partition conditions of the one-dimensional statement (and the operator-norm,
// sup-norm and sigma_n^2 checks) along the grid.
DiagReport check_vdv_conditions(const DiagFamily& fam, const std::vector<std::size_t>& n_grid,
                                const DiagOptions& opt = {});
// The four extra conditions for the functional statement.
DiagReport check_fvdv_extra(const DiagFamily& fam, const std::vector<std::size_t>& n_grid,
                            const DiagOptions& opt = {});

struct DiagRun {
    Ensemble paths;
    std::vector<double> grid;
    DiagQuantities q;
};

// W_n(t) = (sum_{i<j<=nt} K_n(X_i, X_j) - C(nt, 2) E K_n) / sigma_n over `replicates` samples.
DiagRun run_diag_fclt(const DiagFamily& fam, std::size_t n, std::size_t replicates, const std::vector<double>& grid,
                      const RngStream& rng, std::size_t workers, const DiagOptions& opt = {});

}  // namespace ustat
