#include "ustat/changepoint.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "ustat/errors.hpp"
#include "ustat/finite_table.hpp"
#include "ustat/limit_processes.hpp"

namespace ustat {

ChangepointStat ystat_path(const Kernel& k, const PointSet& sample, const std::vector<double>& grid, double gamma2,
                           std::size_t n_param) {
    if (k.order != 2) throw Refusal("ystat_path: kernel must have order 2");
    const std::size_t n = sample.size();
    if (n_param == 0) n_param = n;
    // left[j] = sum_{i<j} psi(X_i, X_j), right[i] = sum_{j>i} psi(X_i, X_j).
    std::vector<double> left(n, 0.0), right(n, 0.0);
    std::array<PointView, 2> args;
    for (std::size_t i = 0; i < n; ++i) {
        args[0] = sample[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            args[1] = sample[j];
            const double v = k(args, n_param);
            right[i] += v;
            left[j] += v;
        }
    }
    std::vector<double> y(n + 1, 0.0);
    for (std::size_t m = 1; m <= n; ++m) y[m] = y[m - 1] - left[m - 1] + right[m - 1];
    ChangepointStat out;
    out.n = n;
    out.grid = grid;
    out.values.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) out.values[g] = y[prefix_length(n, grid[g])];
    if (gamma2 > 0.0) {
        out.gamma2 = gamma2;
        const double gamma = std::sqrt(gamma2);
        out.normalized.resize(grid.size());
        for (std::size_t g = 0; g < grid.size(); ++g) out.normalized[g] = out.values[g] / gamma;
    }
    return out;
}

double inner_tail_sum(const Kernel& k, const PointSet& sample, std::size_t prefix, std::size_t n_param) {
    const std::size_t n = sample.size();
    double s = 0.0;
    std::array<PointView, 2> args;
    for (std::size_t i = prefix; i < n; ++i) {
        args[0] = sample[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            args[1] = sample[j];
            s += k(args, n_param);
        }
    }
    return s;
}

namespace {

void check_times(double s, double t) {
    if (!(0.0 <= s && s <= t && t <= 1.0)) throw Refusal("changepoint covariance: need 0 <= s <= t <= 1");
}

}  // namespace

double ycov_exact(double gamma1_sq, double gamma2_sq, std::size_t n, double s, double t) {
    check_times(s, t);
    const double a = static_cast<double>(prefix_length(n, s));
    const double b = static_cast<double>(prefix_length(n, t));
    const double nn = static_cast<double>(n);
    // Common pairs: i <= a, j > b. Linear part: each index k carries c_s(k) c_t(k) gamma1^2,
    // with c_s(k) = n - a for k <= a and a otherwise.
    const double common = a * (nn - b);
    return gamma2_sq * common + gamma1_sq * common * ((nn - a) + (b - a) + b);
}

double ycov_display(double gamma1_sq, double gamma2_sq, std::size_t n, double s, double t) {
    check_times(s, t);
    const double a = static_cast<double>(prefix_length(n, s));
    const double b = static_cast<double>(prefix_length(n, t));
    const double nn = static_cast<double>(n);
    return gamma2_sq * a * (nn - b + 1) +
           gamma1_sq * (a * (nn - b + 1) * (nn - a + 1) + a * (nn - b + 1) * (b - a + 1) + a * b * (nn - b + 1));
}

double limit_mixture_cov(double c1, double c2, double s, double t) {
    return c1 * c1 * a_process_cov(s, t) + c2 * c2 * bridge_cov(s, t);
}

Kernel ensure_centered(const Kernel& k, const Distribution& dist, const EvalMode& mode, std::size_t n_param,
                       double tol, std::string* notice) {
    const std::size_t n = std::max<std::size_t>(n_param, 2);
    double mean = 0.0, allowed = tol;
    if (mode.is_exact()) {
        mean = table_expect(Table::tabulate(k, dist, n), dist.weights());
    } else {
        // A Monte Carlo mean is only trusted once it clears its own noise level.
        RngStream rng(mode.seed, hash_combine(0xCE17E4ull, n));
        const McValue v = mc_g_value(k, dist, {}, 20 * mode.M, rng, n);
        mean = v.mean;
        allowed = std::max(tol, 4.0 * v.se);
    }
    if (std::abs(mean) <= allowed) return k;
    if (notice) *notice = "kernel mean " + std::to_string(mean) + " exceeds tolerance; centring applied";
    return center_kernel(k, dist, mode);
}

CTrend estimate_c(const Kernel& k, const Distribution& dist, const std::vector<std::size_t>& n_grid,
                  const EvalMode& mode) {
    if (k.order != 2) throw Refusal("estimate_c: kernel must have order 2");
    if (n_grid.size() < 2) throw Refusal("estimate_c: need at least two grid points");
    CTrend out;
    out.n_grid = n_grid;
    std::optional<Sigma2> fixed;  // components do not depend on n for a fixed kernel
    for (std::size_t n : n_grid) {
        if (!fixed || k.size_dependent) fixed = variance_sigma2(k, dist, n, mode);
        const Sigma2& s = *fixed;
        const double g1 = s.psi_norm2[1], g2 = s.psi_norm2[2];
        const double gn = ycov_exact(g1, g2, n, 0.5, 0.5);
        if (!(gn > 0.0)) throw Refusal("estimate_c: gamma_n^2 vanishes at n=" + std::to_string(n));
        const double nn = static_cast<double>(n);
        out.gamma1_sq.push_back(g1);
        out.gamma2_sq.push_back(g2);
        out.gamma_n_sq.push_back(gn);
        const double c1 = nn * nn * nn * g1 / gn, c2 = nn * nn * g2 / gn;
        out.c1_sq.push_back(c1);
        out.c2_sq.push_back(c2);
        out.consistency.push_back(gn * (c1 + c2) / (nn * nn * nn * g1 + nn * nn * g2));
        out.gamma_over_n3.push_back(g1 > 0.0 ? gn / (g1 * nn * nn * nn) : 0.0);
    }
    out.c1_sq_limit = out.c1_sq.back();
    out.c2_sq_limit = out.c2_sq.back();
    auto heads_to_zero = [&](const std::vector<double>& v) {
        if (v.back() < 1e-12) return true;
        std::vector<double> x, y;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!(v[i] > 0.0)) return false;
            x.push_back(std::log(static_cast<double>(n_grid[i])));
            y.push_back(std::log(v[i]));
        }
        return fit_line(x, y).slope_hi < 0.0;
    };
    out.c2_to_zero = heads_to_zero(out.c2_sq);
    out.c1_to_zero = heads_to_zero(out.c1_sq);
    if (out.c2_to_zero) out.c2_sq_limit = 0.0;
    if (out.c1_to_zero) out.c1_sq_limit = 0.0;
    return out;
}

}  // namespace ustat
