#include "ustat/limit_processes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ustat/errors.hpp"
#include "ustat/parallel.hpp"

namespace ustat {

namespace {

double factorial(std::size_t k) {
    double r = 1.0;
    for (std::size_t i = 2; i <= k; ++i) r *= static_cast<double>(i);
    return r;
}

}  // namespace

LimitSpec LimitSpec::general(std::size_t p, std::vector<double> alpha2) {
    if (alpha2.size() != p) throw Refusal("general limit: need one alpha^2 per level k = 1..p");
    for (double a : alpha2)
        if (a < 0.0) throw Refusal("general limit: alpha^2 must be nonnegative");
    LimitSpec s;
    s.variant = Variant::general;
    s.p = p;
    s.alpha2 = std::move(alpha2);
    return s;
}

LimitSpec LimitSpec::time_changed_bm(std::size_t p) {
    LimitSpec s;
    s.variant = Variant::time_changed_bm;
    s.p = p;
    return s;
}

LimitSpec LimitSpec::a_process() {
    LimitSpec s;
    s.variant = Variant::csorgo_horvath_A;
    return s;
}

LimitSpec LimitSpec::bridge() {
    LimitSpec s;
    s.variant = Variant::brownian_bridge;
    return s;
}

LimitSpec LimitSpec::mixture(double c1, double c2) {
    LimitSpec s;
    s.variant = Variant::mixture;
    s.c1 = c1;
    s.c2 = c2;
    return s;
}

LimitSpec LimitSpec::rgg_limit(RggCovParams params) {
    LimitSpec s;
    s.variant = Variant::rgg_case;
    s.p = params.p;
    s.rgg = std::move(params);
    return s;
}

std::string LimitSpec::describe() const {
    std::ostringstream o;
    switch (variant) {
        case Variant::general: o << "general(p=" << p << ")"; break;
        case Variant::time_changed_bm: o << "B(t^" << p << ")"; break;
        case Variant::csorgo_horvath_A: o << "A"; break;
        case Variant::brownian_bridge: o << "bridge"; break;
        case Variant::mixture: o << c1 << "*A+" << c2 << "*b"; break;
        case Variant::rgg_case: o << "rgg_C" << (static_cast<int>(rgg.rcase) + 1); break;
    }
    return o.str();
}

double gamma_kp(std::size_t k, std::size_t p, double s, double t) {
    const double lo = std::min(s, t), hi = std::max(s, t);
    return std::pow(lo, static_cast<double>(p)) * std::pow(hi, static_cast<double>(p - k));
}

double gamma_cov(std::size_t p, const std::vector<double>& alpha2, double s, double t) {
    double v = 0.0;
    for (std::size_t k = 1; k <= p; ++k) v += alpha2[k - 1] * gamma_kp(k, p, s, t);
    return v;
}

double a_process_cov(double s, double t) {
    if (s > t) std::swap(s, t);
    return (1 - 2 * s) * (1 - 2 * t) * s + (1 - 2 * s) * t * s + s * (1 - 2 * t) * t + s * t;
}

double bridge_cov(double s, double t) { return std::min(s, t) - s * t; }

double psi_cov(double rho, const std::vector<double>& dk, double nu, std::size_t p, double s, double t) {
    if (dk.size() != p) throw Refusal("psi_cov: need d_1..d_p");
    double norm = 0.0, v = 0.0;
    for (std::size_t k = 1; k <= p; ++k) {
        const double pk = factorial(p - k);
        const double coef = std::pow(rho, static_cast<double>(2 * p - k - 1)) * (dk[k - 1] - (k == 1 ? nu * nu : 0.0)) /
                            (factorial(k) * pk * pk);
        norm += coef;
        v += coef * gamma_kp(k, p, s, t);
    }
    if (!(norm > 0.0)) throw Refusal("psi_cov: normalising sum is not positive");
    return v / norm;
}

double rgg_case_cov(const RggCovParams& params, double s, double t) {
    const std::size_t p = params.p;
    switch (params.rcase) {
        case RggCase::C1:
            return std::pow(std::min(s, t), static_cast<double>(p));
        case RggCase::C2: {
            const double lam = params.lambda;
            // a/0 = inf and a/inf = 0.
            const double w1 = std::isinf(lam) ? 1.0 : (lam == 0.0 ? 0.0 : 1.0 / (1.0 + 1.0 / lam));
            const double w2 = std::isinf(lam) ? 0.0 : 1.0 / (1.0 + lam);
            return w1 * gamma_kp(1, p, s, t) + (p >= 2 ? w2 * gamma_kp(2, p, s, t) : 0.0);
        }
        case RggCase::C3:
            return gamma_kp(1, p, s, t);
        case RggCase::C4:
            return psi_cov(params.rho, params.dk, params.nu, p, s, t);
    }
    return 0.0;
}

double limit_cov(const LimitSpec& spec, double s, double t) {
    switch (spec.variant) {
        case LimitSpec::Variant::general: return gamma_cov(spec.p, spec.alpha2, s, t);
        case LimitSpec::Variant::time_changed_bm: return std::pow(std::min(s, t), static_cast<double>(spec.p));
        case LimitSpec::Variant::csorgo_horvath_A: return a_process_cov(s, t);
        case LimitSpec::Variant::brownian_bridge: return bridge_cov(s, t);
        case LimitSpec::Variant::mixture:
            return spec.c1 * spec.c1 * a_process_cov(s, t) + spec.c2 * spec.c2 * bridge_cov(s, t);
        case LimitSpec::Variant::rgg_case: return rgg_case_cov(spec.rgg, s, t);
    }
    return 0.0;
}

Eigen::MatrixXd covariance_matrix(const LimitSpec& spec, const std::vector<double>& grid) {
    const auto m = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd c(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) c(i, j) = limit_cov(spec, grid[i], grid[j]);
    return c;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

Ensemble simulate_gaussian(const LimitSpec& spec, const std::vector<double>& grid, std::size_t replicates,
                           const RngStream& rng, std::size_t workers) {
    const Eigen::MatrixXd c = covariance_matrix(spec, grid);
    const double lam = min_eigenvalue(c);
    if (lam < -1e-9) {
        std::ostringstream msg;
        msg << "simulate_gaussian: covariance is indefinite, minimum eigenvalue " << lam;
        throw Refusal(msg.str());
    }
    const auto m = c.rows();
    // Zero-variance grid points (t = 0, bridge endpoints) are handled by the ridge.
    Eigen::LLT<Eigen::MatrixXd> llt(c + 1e-12 * Eigen::MatrixXd::Identity(m, m));
    if (llt.info() != Eigen::Success) throw Refusal("simulate_gaussian: Cholesky failed after ridge");
    const Eigen::MatrixXd L = llt.matrixL();
    Ensemble out(replicates, std::vector<double>(grid.size()));
    parallel_for(replicates, workers, [&](std::size_t r) {
        RngStream local = rng.split(r);
        Eigen::VectorXd z(m);
        for (Eigen::Index i = 0; i < m; ++i) z(i) = local.normal();
        const Eigen::VectorXd x = L * z;
        for (Eigen::Index i = 0; i < m; ++i) out[r][i] = x(i);
    });
    return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_cdf(double x) {
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < 0.3) {
        // Dual (Jacobi) form converges fast for small x.
        const double pi = 3.14159265358979323846;
        double s = 0.0;
        for (int k = 1; k < 200; ++k) {
            const double term = std::exp(-(2 * k - 1) * (2 * k - 1) * pi * pi / (8 * x * x));
            s += term;
            if (term < 1e-16) break;
        }
        return std::sqrt(2 * pi) / x * s;
    }
    double s = 0.0;
    for (int k = 1; k < 1000; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 == 1 ? term : -term);
        if (term < 1e-12) break;
    }
    return std::clamp(1.0 - 2.0 * s, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.size() < 100) throw Refusal("ks_test: needs at least 100 samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return {d, 1.0 - kolmogorov_cdf(std::sqrt(n) * d)};
}

CovEstimate empirical_cov(const Ensemble& ensemble, std::size_t batches) {
    const std::size_t R = ensemble.size();
    if (R < 2) throw Refusal("empirical_cov: needs at least two replicates");
    const std::size_t m = ensemble.front().size();
    auto cov_of = [&](std::size_t begin, std::size_t end) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
        for (std::size_t r = begin; r < end; ++r)
            for (std::size_t i = 0; i < m; ++i) mean(i) += ensemble[r][i];
        mean /= static_cast<double>(end - begin);
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, m);
        for (std::size_t r = begin; r < end; ++r) {
            Eigen::VectorXd x(m);
            for (std::size_t i = 0; i < m; ++i) x(i) = ensemble[r][i] - mean(i);
            c.noalias() += x * x.transpose();
        }
        return Eigen::MatrixXd(c / static_cast<double>(end - begin - 1));
    };
    CovEstimate est;
    est.cov = cov_of(0, R);
    batches = std::clamp<std::size_t>(batches, 2, R / 2);
    std::vector<Eigen::MatrixXd> parts;
    for (std::size_t b = 0; b < batches; ++b) parts.push_back(cov_of(b * R / batches, (b + 1) * R / batches));
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(m, m);
    for (const auto& p : parts) mean += p;
    mean /= static_cast<double>(batches);
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(m, m);
    for (const auto& p : parts) var += (p - mean).cwiseAbs2();
    var /= static_cast<double>(batches - 1);
    est.se = (var / static_cast<double>(batches)).cwiseSqrt();
    return est;
}

double student_t_quantile_975(std::size_t dof) {
    static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                   2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                   2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
    if (dof == 0) return std::numeric_limits<double>::infinity();
    if (dof <= 30) return table[dof - 1];
    return 1.96 + 2.4 / static_cast<double>(dof);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw Refusal("fit_line: needs at least two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0) throw Refusal("fit_line: x values are all equal");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n == 2) {
        f.slope_lo = -std::numeric_limits<double>::infinity();
        f.slope_hi = std::numeric_limits<double>::infinity();
        return f;
    }
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        rss += r * r;
    }
    const double se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    const double q = student_t_quantile_975(n - 2);
    f.slope_lo = f.slope - q * se;
    f.slope_hi = f.slope + q * se;
    return f;
}

IncrementFit increment_moment_diag(const Ensemble& ensemble, const std::vector<double>& grid, std::size_t n,
                                   const std::vector<std::pair<std::size_t, std::size_t>>& pairs, double beta) {
    IncrementFit fit;
    std::vector<double> lx, ly;
    for (const auto& [i, j] : pairs) {
        const double span = (std::floor(n * grid[j] + 1e-9) - std::floor(n * grid[i] + 1e-9)) / static_cast<double>(n);
        double m = 0.0;
        for (const auto& path : ensemble) m += std::pow(std::abs(path[j] - path[i]), beta);
        m /= static_cast<double>(ensemble.size());
        fit.spans.push_back(span);
        fit.moments.push_back(m);
        if (span > 0.0 && m > 0.0) {
            lx.push_back(std::log(span));
            ly.push_back(std::log(m));
        }
    }
    if (lx.size() < 2) {
        fit.degenerate = true;
        return fit;
    }
    const LineFit lf = fit_line(lx, ly);
    fit.C = std::exp(lf.intercept);
    fit.exponent = lf.slope;
    fit.ci_lo = lf.slope_lo;
    fit.ci_hi = lf.slope_hi;
    return fit;
}

}  // namespace ustat
