#include "ustat/diag_dominant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ustat/errors.hpp"
#include "ustat/parallel.hpp"
#include "ustat/ustat.hpp"

namespace ustat {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double simpson_fixed(const std::function<double(double)>& f, double a, double b, std::size_t panels) {
    const double h = (b - a) / static_cast<double>(panels);
    double s = f(a) + f(b);
    for (std::size_t i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
    return s * h / 3.0;
}

// Mass of the density 1 + a cos(2 pi x) on [lo, hi].
double haar_cell_mass(double amp, double lo, double hi) {
    return (hi - lo) + amp * (std::sin(kTwoPi * hi) - std::sin(kTwoPi * lo)) / kTwoPi;
}

std::vector<double> haar_cell_masses(const DiagFamily& fam, std::size_t I) {
    const std::size_t cells = std::size_t{1} << I;
    std::vector<double> m(cells);
    const double h = 1.0 / static_cast<double>(cells);
    for (std::size_t c = 0; c < cells; ++c)
        m[c] = haar_cell_mass(fam.haar_density_amp, h * static_cast<double>(c), h * static_cast<double>(c + 1));
    return m;
}

bool nonincreasing(const std::vector<double>& v, double rel = 1e-9) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[i - 1] + rel * std::max(std::abs(v[i - 1]), 1e-300)) return false;
    return true;
}

bool increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

// Bounded along a finite grid: max <= 2 median and no growth from first to last beyond 25%.
bool bounded(const std::vector<double>& v) {
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    const double med = s.size() % 2 ? s[s.size() / 2] : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
    if (s.back() == 0.0) return true;
    return s.back() <= 2.0 * med && v.back() <= 1.25 * v.front();
}

// Bounded below away from zero: positive and not shrinking by more than half.
bool bounded_below(const std::vector<double>& v) {
    for (double x : v)
        if (!(x > 0.0)) return false;
    return v.back() >= 0.5 * v.front();
}

template <class Get>
std::vector<double> column(const std::vector<DiagQuantities>& rows, Get get) {
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(get(r));
    return out;
}

// Largest eigenvalue of the circulant discretisation of f -> int D_k(x - v) f(v) mu(dv).
double dirichlet_power_iteration(std::size_t k, std::size_t N) {
    std::vector<double> row(N);
    for (std::size_t m = 0; m < N; ++m) row[m] = dirichlet_value(k, kTwoPi * static_cast<double>(m) / static_cast<double>(N)) / static_cast<double>(N);
    std::vector<double> v(N), w(N);
    RngStream rng(12345, 0);
    for (auto& x : v) x = rng.normal();
    double lambda = 0.0;
    for (int it = 0; it < 30; ++it) {
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm;
        for (std::size_t i = 0; i < N; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < N; ++j) s += row[(i + N - j) % N] * v[j];
            w[i] = s;
        }
        double num = 0.0;
        for (std::size_t i = 0; i < N; ++i) num += w[i] * v[i];
        lambda = num;
        std::swap(v, w);
    }
    return std::abs(lambda);
}

}  // namespace

double simpson(const std::function<double(double)>& f, double a, double b, std::size_t min_panels, double rel_tol,
               std::size_t max_panels) {
    if (min_panels < 2) min_panels = 2;
    if (min_panels % 2) ++min_panels;
    double prev = simpson_fixed(f, a, b, min_panels);
    for (std::size_t panels = 2 * min_panels; panels <= max_panels; panels *= 2) {
        const double cur = simpson_fixed(f, a, b, panels);
        if (std::abs(cur - prev) <= rel_tol * std::max(std::abs(cur), std::abs(prev))) return cur;
        prev = cur;
    }
    throw Refusal("simpson: no convergence within the panel budget");
}

double dirichlet_value(std::size_t k, double u) {
    const double s = std::sin(0.5 * u);
    const double kk = static_cast<double>(k);
    if (std::abs(s) < 1e-9) {
        // Second-order expansion around the removable singularity.
        const double u0 = std::remainder(u, kTwoPi);
        const double lead = (2.0 * kk + 1.0) / kTwoPi;
        return lead * (1.0 - kk * (kk + 1.0) * u0 * u0 / 6.0);
    }
    return std::sin((kk + 0.5) * u) / (kTwoPi * s);
}

double dirichlet_integral(std::size_t k, double a, double b) {
    double s = b - a;
    for (std::size_t j = 1; j <= k; ++j) {
        const double jj = static_cast<double>(j);
        s += 2.0 * (std::sin(jj * b) - std::sin(jj * a)) / jj;
    }
    return s / kTwoPi;
}

Kernel dirichlet_kernel(std::size_t k) {
    return {"dirichlet(k=" + std::to_string(k) + ")", 2, false,
            [k](std::span<const PointView> x, std::size_t) { return dirichlet_value(k, x[0][0] - x[1][0]); }};
}

double haar_value(std::size_t I, double x, double y) {
    const double scale = std::ldexp(1.0, static_cast<int>(I));
    if (x < 0.0 || x >= 1.0 || y < 0.0 || y >= 1.0) return 0.0;
    return std::floor(x * scale) == std::floor(y * scale) ? scale : 0.0;
}

double haar_value_by_basis(std::size_t I, double x, double y) {
    if (x < 0.0 || x >= 1.0 || y < 0.0 || y >= 1.0) return 0.0;
    double s = 1.0;  // scaling function phi = 1 on [0, 1)
    for (std::size_t i = 0; i < I; ++i) {
        const double scale = std::ldexp(1.0, static_cast<int>(i));
        const double jx = std::floor(x * scale), jy = std::floor(y * scale);
        if (jx != jy) continue;
        // psi_{i,j}(x) = 2^{i/2} (1 on the left half, -1 on the right half).
        const double fx = x * scale - jx, fy = y * scale - jy;
        const double sx = fx < 0.5 ? 1.0 : -1.0, sy = fy < 0.5 ? 1.0 : -1.0;
        s += scale * sx * sy;
    }
    return s;
}

Kernel haar_kernel(std::size_t I) {
    return {"haar(I=" + std::to_string(I) + ")", 2, false,
            [I](std::span<const PointView> x, std::size_t) { return haar_value(I, x[0][0], x[1][0]); }};
}

std::size_t DiagFamily::param(std::size_t n) const {
    const double nn = static_cast<double>(n);
    const double target = kn_nlogn ? nn * std::log(nn) : std::ceil(std::pow(nn, kn_exponent));
    if (kind == Kind::dirichlet) {
        // Smallest odd 2k+1 >= target.
        const double k = std::ceil((std::ceil(target) - 1.0) / 2.0);
        return static_cast<std::size_t>(std::max(0.0, k));
    }
    return static_cast<std::size_t>(std::max(0.0, std::round(std::log2(target))));
}

double DiagFamily::kn_nominal(std::size_t n) const {
    const std::size_t q = param(n);
    return kind == Kind::dirichlet ? 2.0 * static_cast<double>(q) + 1.0 : std::ldexp(1.0, static_cast<int>(q));
}

Kernel DiagFamily::kernel(std::size_t n) const {
    return kind == Kind::dirichlet ? dirichlet_kernel(param(n)) : haar_kernel(param(n));
}

Distribution DiagFamily::distribution() const {
    if (kind == Kind::dirichlet) return Distribution::circle_uniform();
    if (haar_density_amp == 0.0) return Distribution::cube_uniform(1, 0.0, 1.0);
    if (!(std::abs(haar_density_amp) < 1.0)) throw Refusal("Haar density amplitude must satisfy |a| < 1");
    const double a = haar_density_amp;
    return Distribution::density(Box{{0.0}, {1.0}}, [a](PointView x) { return 1.0 + a * std::cos(kTwoPi * x[0]); },
                                 1.0 + std::abs(a), "haar-density");
}

std::string DiagFamily::describe() const {
    std::ostringstream o;
    o << (kind == Kind::dirichlet ? "dirichlet" : "haar") << ", k_n ~ ";
    if (kn_nlogn)
        o << "n log n";
    else
        o << "n^" << kn_exponent;
    if (kind == Kind::haar && haar_density_amp != 0.0) o << ", density 1 + " << haar_density_amp << " cos(2 pi x)";
    return o.str();
}

PartitionSpec diag_partition(const DiagFamily& fam, std::size_t n, const DiagOptions& opt) {
    PartitionSpec ps;
    if (fam.kind == DiagFamily::Kind::dirichlet) {
        const double delta = std::pow(static_cast<double>(n), 1.5 * opt.alpha2) / std::sqrt(fam.kn_nominal(n));
        const std::size_t M = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(kTwoPi / delta)));
        const double width = kTwoPi / static_cast<double>(M);
        for (std::size_t m = 0; m <= M; ++m) ps.edges.push_back(-kPi + width * static_cast<double>(m));
        ps.measures.assign(M, 1.0 / static_cast<double>(M));
        return ps;
    }
    const std::size_t I = fam.param(n);
    const std::size_t blocks = std::size_t{1} << (I / 2);  // M_n = k_n^{1/2}, rounded down to a power of two
    const std::vector<double> cells = haar_cell_masses(fam, I);
    const std::size_t per = cells.size() / blocks;
    for (std::size_t b = 0; b <= blocks; ++b) ps.edges.push_back(static_cast<double>(b) / static_cast<double>(blocks));
    for (std::size_t b = 0; b < blocks; ++b) {
        double m = 0.0;
        for (std::size_t c = b * per; c < (b + 1) * per; ++c) m += cells[c];
        ps.measures.push_back(m);
    }
    return ps;
}

DiagQuantities diag_quantities(const DiagFamily& fam, std::size_t n, const DiagOptions& opt) {
    DiagQuantities q;
    q.n = n;
    q.param = fam.param(n);
    q.kn_nominal = fam.kn_nominal(n);
    const PartitionSpec ps = diag_partition(fam, n, opt);
    q.M = ps.M();
    q.max_measure = *std::max_element(ps.measures.begin(), ps.measures.end());
    q.min_measure = *std::min_element(ps.measures.begin(), ps.measures.end());
    const double nn = static_cast<double>(n);
    double var_b = 0.0, var_g1b = 0.0;

    if (fam.kind == DiagFamily::Kind::dirichlet) {
        const std::size_t k = q.param;
        const double width = ps.edges[1] - ps.edges[0];
        const double inv4pi2 = 1.0 / (kTwoPi * kTwoPi);
        // Lebesgue integrals; mu has density 1/(2 pi) so mu^2 integrals carry 1/(4 pi^2).
        const double total = 2.0 * static_cast<double>(k) + 1.0;  // int int_{[-pi,pi]^2} D_k^2
        const double cell = 2.0 * simpson([&](double u) {
            const double d = dirichlet_value(k, u);
            return (width - u) * d * d;
        }, 0.0, width);
        q.kn = total * inv4pi2;
        q.diag_mass = static_cast<double>(q.M) * cell / total;
        q.max_cell_mass = cell / total;
        q.offdiag_mass = (total - static_cast<double>(q.M) * cell) * inv4pi2;
        q.op_norm = 1.0 / kTwoPi;
        q.sup_over_kn = (total / kTwoPi) / q.kn;
        q.g0 = 1.0 / kTwoPi;  // E K = (1/2pi) int D_k = 1/(2 pi)
        q.var_g1 = 0.0;       // g_1 = 1/(2 pi) for every x
        const std::size_t N = 2 * k + 2;
        if (N <= opt.power_iter_cap) q.op_norm_numeric = dirichlet_power_iteration(k, N);
        // Off-diagonal part B = K 1_{Q^c}: g_1^B(x) = (1 - int_{cell(x)} D_k(x - y) dy) / (2 pi),
        // the same function of the offset v = x - (cell start) in every cell.
        auto g1b = [&](double v) { return (1.0 - dirichlet_integral(k, v - width, v)) / kTwoPi; };
        const double m1 = simpson(g1b, 0.0, width, 512) / width;
        const double m2 = simpson([&](double v) { const double g = g1b(v); return g * g; }, 0.0, width, 512) / width;
        var_g1b = std::max(0.0, m2 - m1 * m1);
        var_b = q.offdiag_mass - m1 * m1;
    } else {
        const std::size_t I = q.param;
        const double scale = std::ldexp(1.0, static_cast<int>(I));
        const std::vector<double> cells = haar_cell_masses(fam, I);
        double kn = 0.0, g0 = 0.0, g1sq = 0.0, max_block = 0.0, max_cell = 0.0;
        const std::size_t per = cells.size() / q.M;
        for (std::size_t b = 0; b < q.M; ++b) {
            double blk = 0.0;
            for (std::size_t c = b * per; c < (b + 1) * per; ++c) blk += scale * scale * cells[c] * cells[c];
            max_block = std::max(max_block, blk);
        }
        for (double m : cells) {
            kn += scale * scale * m * m;
            g0 += scale * m * m;
            g1sq += m * (scale * m) * (scale * m);
            max_cell = std::max(max_cell, m);
        }
        q.kn = kn;
        q.diag_mass = 1.0;  // every dyadic cell lies inside one block
        q.max_cell_mass = max_block / kn;
        q.offdiag_mass = 0.0;
        q.op_norm = scale * max_cell;
        q.sup_over_kn = scale / kn;
        q.g0 = g0;
        q.var_g1 = std::max(0.0, g1sq - g0 * g0);
    }
    q.kn_over_n = q.kn / nn;
    q.measure_kn_over_n = q.max_measure * q.kn / nn;
    q.n_min_measure = nn * q.min_measure;
    q.e7 = std::pow(nn, 0.5 + opt.eps1) * q.max_measure;
    q.e71a = q.max_measure * q.kn / std::pow(nn, 1.0 - opt.eps2);
    q.e71b = std::pow(nn, 1.0 - opt.eps2) * q.min_measure;
    q.e8 = std::pow(nn, 1.0 + opt.alpha1) / q.kn;
    q.e9 = std::pow(nn, opt.alpha2) / q.kn * q.offdiag_mass;
    const double pairs = binom(nn, 2.0);
    q.sigma2 = pairs * (2.0 * (nn - 2.0) * q.var_g1 + (q.kn - q.g0 * q.g0));
    q.sigma_ratio = 2.0 * q.sigma2 / (nn * nn * q.kn);
    q.var_r_ratio = pairs * (2.0 * (nn - 2.0) * var_g1b + std::max(0.0, var_b)) / q.sigma2;
    return q;
}

DiagReport check_vdv_conditions(const DiagFamily& fam, const std::vector<std::size_t>& n_grid,
                                const DiagOptions& opt) {
    DiagReport rep;
    for (std::size_t n : n_grid) rep.rows.push_back(diag_quantities(fam, n, opt));
    const auto& r = rep.rows;
    rep.trends["kn_over_n_increasing"] = increasing(column(r, [](const auto& x) { return x.kn_over_n; }));
    rep.trends["diag_mass_to_one"] = nonincreasing(column(r, [](const auto& x) { return std::abs(1.0 - x.diag_mass); }));
    rep.trends["max_cell_mass_to_zero"] = nonincreasing(column(r, [](const auto& x) { return x.max_cell_mass; }));
    rep.trends["measure_kn_over_n_to_zero"] = nonincreasing(column(r, [](const auto& x) { return x.measure_kn_over_n; }));
    rep.trends["n_min_measure_bounded_below"] = bounded_below(column(r, [](const auto& x) { return x.n_min_measure; }));
    rep.trends["op_norm_bounded"] = bounded(column(r, [](const auto& x) { return x.op_norm; }));
    rep.trends["sup_over_kn_bounded"] = bounded(column(r, [](const auto& x) { return x.sup_over_kn; }));
    rep.trends["sigma_ratio_to_one"] = nonincreasing(column(r, [](const auto& x) { return std::abs(1.0 - x.sigma_ratio); }));
    rep.trends["var_r_ratio_to_zero"] = nonincreasing(column(r, [](const auto& x) { return x.var_r_ratio; }));
    bool op_ok = true;
    for (const auto& x : r)
        if (x.op_norm_numeric >= 0.0 && std::abs(x.op_norm_numeric - x.op_norm) > 1e-6 * x.op_norm) op_ok = false;
    rep.trends["op_norm_power_iteration"] = op_ok;
    for (const auto& [name, ok] : rep.trends) rep.all_pass = rep.all_pass && ok;
    return rep;
}

DiagReport check_fvdv_extra(const DiagFamily& fam, const std::vector<std::size_t>& n_grid, const DiagOptions& opt) {
    DiagReport rep;
    for (std::size_t n : n_grid) rep.rows.push_back(diag_quantities(fam, n, opt));
    const auto& r = rep.rows;
    rep.trends["e7_bounded"] = bounded(column(r, [](const auto& x) { return x.e7; }));
    rep.trends["e71_bounded_or_below"] = bounded(column(r, [](const auto& x) { return x.e71a; })) ||
                                         bounded_below(column(r, [](const auto& x) { return x.e71b; }));
    // n^{1+alpha1}/k_n only involves k_n, which is known in closed form, so the sup is
    // also checked far past the simulated grid (slow growth such as n^{1/4}/log n is
    // invisible over a factor of four in n).
    std::vector<double> e8_far;
    for (double n = static_cast<double>(n_grid.front()); n <= 0x1p40; n *= 2.0)
        e8_far.push_back(std::pow(n, 1.0 + opt.alpha1) / fam.kn_nominal(static_cast<std::size_t>(n)));
    const std::size_t half = e8_far.size() / 2;
    const double early = *std::max_element(e8_far.begin(), e8_far.begin() + half);
    const double late = *std::max_element(e8_far.begin() + half, e8_far.end());
    rep.trends["e8_bounded"] = bounded(column(r, [](const auto& x) { return x.e8; })) && late <= 1.25 * early;
    rep.trends["e9_bounded"] = bounded(column(r, [](const auto& x) { return x.e9; }));
    for (const auto& [name, ok] : rep.trends) rep.all_pass = rep.all_pass && ok;
    return rep;
}

DiagRun run_diag_fclt(const DiagFamily& fam, std::size_t n, std::size_t replicates, const std::vector<double>& grid,
                      const RngStream& rng, std::size_t workers, const DiagOptions& opt) {
    DiagRun run;
    run.grid = grid;
    run.q = diag_quantities(fam, n, opt);
    const Kernel k = fam.kernel(n);
    const Distribution dist = fam.distribution();
    run.paths.assign(replicates, std::vector<double>(grid.size()));
    const double g0 = run.q.g0;
    const double sigma = std::sqrt(run.q.sigma2);
    parallel_for(replicates, workers, [&](std::size_t r) {
        RngStream local = rng.split(r);
        const PointSet sample = dist.sample(n, local);
        const SequentialPath path = sequential_upath(k, sample, grid, n);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double m = static_cast<double>(prefix_length(n, grid[i]));
            run.paths[r][i] = (path.values[i] - binom(m, 2.0) * g0) / sigma;
        }
    });
    return run;
}

}  // namespace ustat
