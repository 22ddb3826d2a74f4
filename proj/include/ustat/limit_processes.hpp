#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ustat/rng.hpp"

namespace ustat {

enum class RggCase { C1, C2, C3, C4 };

struct RggCovParams {
    RggCase rcase = RggCase::C1;
    std::size_t p = 2;
    double lambda = 1.0;        // C2, may be 0 or +inf
    double rho = 1.0;           // C4
    std::vector<double> dk;     // C4: d_1..d_p
    double nu = 0.0;            // C4
};

struct LimitSpec {
    enum class Variant { general, time_changed_bm, csorgo_horvath_A, brownian_bridge, mixture, rgg_case };
    Variant variant = Variant::time_changed_bm;
    std::size_t p = 1;
    std::vector<double> alpha2;  // alpha^2_{k,p}, k = 1..p
    double c1 = 0.0, c2 = 0.0;   // mixture c1 A + c2 b
    RggCovParams rgg;

    static LimitSpec general(std::size_t p, std::vector<double> alpha2);
    static LimitSpec time_changed_bm(std::size_t p);
    static LimitSpec a_process();
    static LimitSpec bridge();
    static LimitSpec mixture(double c1, double c2);
    static LimitSpec rgg_limit(RggCovParams params);

    std::string describe() const;
};

// Gamma(s,t) = sum_k alpha^2_k (s^t)^p (s v t)^{p-k}.
double gamma_cov(std::size_t p, const std::vector<double>& alpha2, double s, double t);
double gamma_kp(std::size_t k, std::size_t p, double s, double t);
// Cov(A(s), A(t)) for A(t) = (1-t)B(t) + t(B(1)-B(t)).
double a_process_cov(double s, double t);
double bridge_cov(double s, double t);
// Thermodynamic covariance with the delta_{k,1} nu^2 corrections (dk holds d_1..d_p).
double psi_cov(double rho, const std::vector<double>& dk, double nu, std::size_t p, double s, double t);
double rgg_case_cov(const RggCovParams& params, double s, double t);
double limit_cov(const LimitSpec& spec, double s, double t);

Eigen::MatrixXd covariance_matrix(const LimitSpec& spec, const std::vector<double>& grid);
double min_eigenvalue(const Eigen::MatrixXd& m);

using Ensemble = std::vector<std::vector<double>>;  // [replicate][grid index]

// Cholesky sampling of the grid law; replicate r draws from rng.split(r).
Ensemble simulate_gaussian(const LimitSpec& spec, const std::vector<double>& grid, std::size_t replicates,
                           const RngStream& rng, std::size_t workers = 1);

double normal_cdf(double x);
// K(x) = 1 - 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_cdf(double x);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

struct CovEstimate {
    Eigen::MatrixXd cov;
    Eigen::MatrixXd se;
};
// Sample covariance across replicates; SEs from `batches` replicate batches.
CovEstimate empirical_cov(const Ensemble& ensemble, std::size_t batches = 20);

struct IncrementFit {
    double C = 0.0;
    double exponent = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    bool degenerate = false;
    std::vector<double> spans;    // (floor(nt) - floor(ns)) / n
    std::vector<double> moments;  // mean |X(t) - X(s)|^beta
};
// pairs hold grid indices (i, j) with grid[i] < grid[j].
IncrementFit increment_moment_diag(const Ensemble& ensemble, const std::vector<double>& grid, std::size_t n,
                                   const std::vector<std::pair<std::size_t, std::size_t>>& pairs, double beta = 4.0);

// Ordinary least squares y = a + b x with a 95% t-interval for b.
struct LineFit {
    double intercept = 0.0, slope = 0.0, slope_lo = 0.0, slope_hi = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
double student_t_quantile_975(std::size_t dof);

}  // namespace ustat
