#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ustat/kernel.hpp"
#include "ustat/limit_processes.hpp"
#include "ustat/sample_space.hpp"
#include "ustat/ustat.hpp"

namespace ustat {

// A connected graph on p <= 4 vertices. Edges are stored as a bit mask over the
// upper-triangular pairs (0,1),(0,2),...,(p-2,p-1); `code` is the smallest mask
// over all vertex relabelings, so two patterns are isomorphic iff codes agree.
class MotifPattern {
public:
    static MotifPattern from_edges(std::size_t p, const std::vector<std::pair<std::size_t, std::size_t>>& edges);
    static MotifPattern edge() { return from_edges(2, {{0, 1}}); }

    std::size_t p() const { return p_; }
    std::uint32_t code() const { return code_; }
    std::size_t edge_count() const;

    // Canonical code of an arbitrary graph on p vertices given as a pair mask.
    static std::uint32_t canonical(std::size_t p, std::uint32_t mask);
    static std::size_t pair_bit(std::size_t p, std::size_t i, std::size_t j);
    static bool connected(std::size_t p, std::uint32_t mask);

private:
    std::size_t p_ = 0;
    std::uint32_t code_ = 0;
};

// 1 if the threshold graph on the arguments (0 < |xi - xj| < t_n) is isomorphic to the motif.
Kernel motif_kernel(const MotifPattern& motif, RadiusRule radius);
// Same test at a fixed radius, for direct use.
bool motif_indicator(const MotifPattern& motif, std::span<const PointView> pts, double radius);

struct GeometricGraph {
    PointSet points;
    double radius = 0.0;
    std::vector<std::vector<std::uint32_t>> neighbors;  // sorted, symmetric
    std::size_t edge_count() const;
};

GeometricGraph build_graph(const PointSet& points, double radius);

// G_{floor(n t)}(motif) on the grid, inserting vertices in sample order.
SequentialPath count_motifs_sequential(const GeometricGraph& g, const MotifPattern& motif,
                                       const std::vector<double>& grid);
// Number of induced copies among all p-subsets, by direct enumeration (small n).
double count_motifs_bruteforce(const GeometricGraph& g, const MotifPattern& motif);

struct MotifConstants {
    std::vector<double> dk, dk_se;  // index k-1
    double nu = 0.0, nu_se = 0.0;
    double d1_minus_nu2 = 0.0, d1_minus_nu2_se = 0.0;
    bool nu_flagged = false;  // nonpositive with a CI excluding positives
    std::size_t samples = 0;
};

// Monte Carlo estimates of d_1..d_p and nu for a density on a box (or a uniform cube).
MotifConstants estimate_dk_nu(const Distribution& dist, const MotifPattern& motif, std::size_t samples,
                              RngStream& rng);

struct RegimeParams {
    RggCase rcase = RggCase::C1;
    std::vector<double> n_td;   // n t_n^d along the grid
    double slope = 0.0;         // log-log slope of n t_n^d
    double rho = 0.0;           // C4
    double lambda = std::numeric_limits<double>::quiet_NaN();  // C2, if estimable
    std::vector<double> lambda_trend;
    bool window_ok = true;      // the extra window of the FCLT (C1, C2)
    std::string note;
};

// var_g1 (optional, one per grid point) and d2 feed the C2 lambda display.
RegimeParams classify_regime(const std::vector<std::size_t>& n_grid, const RadiusRule& radius, std::size_t d,
                             std::size_t p, bool uniform, double slope_tol = 0.05,
                             const std::vector<double>& var_g1 = {}, double d2 = 0.0);

double c1_constant(const MotifConstants& c, std::size_t p);
double c2_constant(const MotifConstants& c, std::size_t p);
double c3_constant(const MotifConstants& c, std::size_t p);
double c4_constant(const MotifConstants& c, std::size_t p, double rho);

// Leading-order Var(G_n): the C1/C3/C4 asymptotic forms, and the C2 lower bound.
double predicted_variance(RggCase rcase, std::size_t n, double t_n, std::size_t d, std::size_t p,
                          const MotifConstants& c, double rho = 0.0);

double limit_cov_rgg(const RggCovParams& params, double s, double t);

// P(0 < |X1 - X2| < r) for X1, X2 uniform on the unit cube in d = 1 or 2, exact.
double edge_probability_unit_cube(std::size_t d, double r);

// g_1(x) = P(|x - X| < r) for X uniform on the unit square, by quadrature over the disk.
double edge_g1_unit_square(double u, double v, double r);
// Var g_1 of the edge kernel under the uniform law on [0, 1]^d, d = 1, 2, r <= 1/2.
double edge_var_g1_unit_cube(std::size_t d, double r);

struct EdgeChangepoint {
    SequentialPath path;  // T_n on the grid
    double max_neg = 0.0;     // M_n
    double argmax = 0.0;      // A_n (smallest maximiser on the grid)
};

// T_n(t) = sigma_n^{-1} sum_{i <= nt < j} (1{edge} - eta_n).
EdgeChangepoint changepoint_edge_stat(const GeometricGraph& g, double eta, double sigma2,
                                      const std::vector<double>& grid);

}  // namespace ustat
