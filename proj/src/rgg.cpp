#include "ustat/rgg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "ustat/errors.hpp"

namespace ustat {

namespace {

constexpr double kPi = 3.14159265358979323846;

double factorial(std::size_t k) {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return f;
}

std::uint32_t threshold_mask(std::span<const PointView> pts, double radius) {
    const std::size_t p = pts.size();
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < pts[i].size(); ++c) {
                const double diff = pts[i][c] - pts[j][c];
                d2 += diff * diff;
            }
            if (d2 > 0.0 && d2 < radius * radius) mask |= 1u << MotifPattern::pair_bit(p, i, j);
        }
    return mask;
}

}  // namespace

std::size_t MotifPattern::pair_bit(std::size_t p, std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    // Pairs in row-major upper-triangular order.
    return i * p - i * (i + 1) / 2 + (j - i - 1);
}

bool MotifPattern::connected(std::size_t p, std::uint32_t mask) {
    std::uint32_t seen = 1, frontier = 1;
    while (frontier) {
        std::uint32_t next = 0;
        for (std::size_t v = 0; v < p; ++v) {
            if (!(frontier >> v & 1)) continue;
            for (std::size_t u = 0; u < p; ++u)
                if (u != v && (mask >> pair_bit(p, u, v) & 1) && !(seen >> u & 1)) next |= 1u << u;
        }
        seen |= next;
        frontier = next;
    }
    return seen == (1u << p) - 1;
}

std::uint32_t MotifPattern::canonical(std::size_t p, std::uint32_t mask) {
    std::array<std::size_t, 4> perm{0, 1, 2, 3};
    std::uint32_t best = ~0u;
    do {
        std::uint32_t m = 0;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i + 1; j < p; ++j)
                if (mask >> pair_bit(p, i, j) & 1) m |= 1u << pair_bit(p, perm[i], perm[j]);
        best = std::min(best, m);
    } while (std::next_permutation(perm.begin(), perm.begin() + static_cast<long>(p)));
    return best;
}

MotifPattern MotifPattern::from_edges(std::size_t p, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    if (p < 2 || p > 4) throw Refusal("motif: vertex count must be 2..4");
    std::uint32_t mask = 0;
    for (auto [i, j] : edges) {
        if (i >= p || j >= p || i == j) throw Refusal("motif: bad edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
        mask |= 1u << pair_bit(p, i, j);
    }
    if (!connected(p, mask)) throw Refusal("motif: pattern must be connected");
    MotifPattern m;
    m.p_ = p;
    m.code_ = canonical(p, mask);
    return m;
}

std::size_t MotifPattern::edge_count() const { return static_cast<std::size_t>(std::popcount(code_)); }

bool motif_indicator(const MotifPattern& motif, std::span<const PointView> pts, double radius) {
    if (pts.size() != motif.p()) throw Refusal("motif_indicator: wrong number of points");
    return MotifPattern::canonical(motif.p(), threshold_mask(pts, radius)) == motif.code();
}

Kernel motif_kernel(const MotifPattern& motif, RadiusRule radius) {
    return {"motif" + std::to_string(motif.p()) + ":" + std::to_string(motif.code()), motif.p(), true,
            [motif, radius](std::span<const PointView> x, std::size_t n) {
                return motif_indicator(motif, x, radius(n)) ? 1.0 : 0.0;
            }};
}

std::size_t GeometricGraph::edge_count() const {
    std::size_t s = 0;
    for (const auto& nb : neighbors) s += nb.size();
    return s / 2;
}

GeometricGraph build_graph(const PointSet& points, double radius) {
    if (!(radius > 0.0)) throw Refusal("build_graph: radius must be positive");
    const std::size_t n = points.size();
    const std::size_t d = points.dim();
    if (d == 0 || d > 3) throw Refusal("build_graph: dimension must be 1..3");
    GeometricGraph g{points, radius, std::vector<std::vector<std::uint32_t>>(n)};

    // Bucket key: cell coordinates packed into 21 bits each.
    auto cell_of = [&](std::size_t i, std::array<std::int64_t, 3>& c) {
        for (std::size_t k = 0; k < 3; ++k) c[k] = k < d ? static_cast<std::int64_t>(std::floor(points[i][k] / radius)) : 0;
    };
    auto pack = [](const std::array<std::int64_t, 3>& c) {
        std::uint64_t key = 0;
        for (std::size_t k = 0; k < 3; ++k) key = (key << 21) | (static_cast<std::uint64_t>(c[k] + (1 << 20)) & 0x1FFFFF);
        return key;
    };
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets;
    std::array<std::int64_t, 3> c{};
    for (std::size_t i = 0; i < n; ++i) {
        cell_of(i, c);
        buckets[pack(c)].push_back(static_cast<std::uint32_t>(i));
    }
    const double r2 = radius * radius;
    const int span1 = 1, span2 = d >= 2 ? 1 : 0, span3 = d >= 3 ? 1 : 0;
    for (std::size_t i = 0; i < n; ++i) {
        cell_of(i, c);
        for (int a = -span1; a <= span1; ++a)
            for (int b = -span2; b <= span2; ++b)
                for (int e = -span3; e <= span3; ++e) {
                    const auto it = buckets.find(pack({c[0] + a, c[1] + b, c[2] + e}));
                    if (it == buckets.end()) continue;
                    for (std::uint32_t j : it->second) {
                        if (j <= i) continue;
                        double d2 = 0.0;
                        for (std::size_t k = 0; k < d; ++k) {
                            const double diff = points[i][k] - points[j][k];
                            d2 += diff * diff;
                        }
                        if (d2 > 0.0 && d2 < r2) {
                            g.neighbors[i].push_back(j);
                            g.neighbors[j].push_back(static_cast<std::uint32_t>(i));
                        }
                    }
                }
    }
    for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
    return g;
}

namespace {

bool adjacent(const GeometricGraph& g, std::uint32_t a, std::uint32_t b) {
    const auto& nb = g.neighbors[a];
    return std::binary_search(nb.begin(), nb.end(), b);
}

std::uint32_t induced_mask(const GeometricGraph& g, const std::vector<std::uint32_t>& vs) {
    const std::size_t p = vs.size();
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j)
            if (adjacent(g, vs[i], vs[j])) mask |= 1u << MotifPattern::pair_bit(p, i, j);
    return mask;
}

// Number of connected induced p-sets containing v whose other vertices are < v
// and whose induced graph matches the motif.
std::size_t count_at_insertion(const GeometricGraph& g, std::uint32_t v, const MotifPattern& motif) {
    const std::size_t p = motif.p();
    if (p == 2) {
        const auto& nb = g.neighbors[v];
        return static_cast<std::size_t>(std::lower_bound(nb.begin(), nb.end(), v) - nb.begin());
    }
    std::set<std::vector<std::uint32_t>> seen;
    std::size_t count = 0;
    std::vector<std::uint32_t> current{v};
    auto extend = [&](auto&& self) -> void {
        if (current.size() == p) {
            std::vector<std::uint32_t> key = current;
            std::sort(key.begin(), key.end());
            if (!seen.insert(key).second) return;
            if (MotifPattern::canonical(p, induced_mask(g, key)) == motif.code()) ++count;
            return;
        }
        std::vector<std::uint32_t> frontier;
        for (std::uint32_t u : current)
            for (std::uint32_t w : g.neighbors[u])
                if (w < v && std::find(current.begin(), current.end(), w) == current.end()) frontier.push_back(w);
        std::sort(frontier.begin(), frontier.end());
        frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
        for (std::uint32_t w : frontier) {
            current.push_back(w);
            self(self);
            current.pop_back();
        }
    };
    extend(extend);
    return count;
}

}  // namespace

SequentialPath count_motifs_sequential(const GeometricGraph& g, const MotifPattern& motif,
                                       const std::vector<double>& grid) {
    if (motif.p() > 4) throw Refusal("count_motifs_sequential: p > 4");
    const std::size_t n = g.points.size();
    std::vector<double> cumulative(n + 1, 0.0);
    for (std::size_t v = 0; v < n; ++v)
        cumulative[v + 1] = cumulative[v] + static_cast<double>(count_at_insertion(g, static_cast<std::uint32_t>(v), motif));
    SequentialPath path{n, grid, std::vector<double>(grid.size())};
    for (std::size_t i = 0; i < grid.size(); ++i) path.values[i] = cumulative[prefix_length(n, grid[i])];
    return path;
}

double count_motifs_bruteforce(const GeometricGraph& g, const MotifPattern& motif) {
    const std::size_t n = g.points.size(), p = motif.p();
    double count = 0.0;
    std::vector<std::uint32_t> idx(p);
    auto rec = [&](auto&& self, std::size_t depth, std::uint32_t start) -> void {
        if (depth == p) {
            if (MotifPattern::canonical(p, induced_mask(g, idx)) == motif.code()) count += 1.0;
            return;
        }
        for (std::uint32_t i = start; i < n; ++i) {
            idx[depth] = i;
            self(self, depth + 1, i + 1);
        }
    };
    rec(rec, 0, 0);
    return count;
}

MotifConstants estimate_dk_nu(const Distribution& dist, const MotifPattern& motif, std::size_t samples,
                              RngStream& rng) {
    if (dist.is_finite() || dist.kind() == DistKind::circle_uniform)
        throw Refusal("estimate_dk_nu: needs a Euclidean density");
    if (samples < 1000) throw Refusal("estimate_dk_nu: need at least 1000 samples");
    const std::size_t p = motif.p();
    const std::size_t d = dist.dim();
    MotifConstants out;
    out.samples = samples;

    // Density moments E_mu[f^m] for m = 0..2p-2 from one x-sample; I(m+1) = E_mu f^m.
    std::vector<double> fm(2 * p - 1, 0.0), fm2(2 * p - 1, 0.0);
    PointSet xs = dist.sample(samples, rng);
    double mean_a = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double f = dist.density_at(xs[i]);
        double pw = 1.0;
        for (std::size_t m = 0; m < fm.size(); ++m) {
            fm[m] += pw;
            fm2[m] += pw * pw;
            pw *= f;
        }
        mean_a += std::pow(f, static_cast<double>(p - 1));
    }
    const double ns = static_cast<double>(samples);
    std::vector<double> I(2 * p, 0.0), I_se(2 * p, 0.0);
    for (std::size_t m = 0; m < fm.size(); ++m) {
        const double mean = fm[m] / ns;
        I[m + 1] = mean;
        I_se[m + 1] = std::sqrt(std::max(0.0, fm2[m] / ns - mean * mean) / ns);
    }
    mean_a /= ns;
    // Var_mu(f^{p-1}) as a sample variance: nonnegative by construction.
    double var_a = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double a = std::pow(dist.density_at(xs[i]), static_cast<double>(p - 1)) - mean_a;
        var_a += a * a;
    }
    var_a /= ns;

    // Geometric integrals over the rescaled unit-radius kernel, uniform draws on [-R, R]^d.
    const double R = static_cast<double>(p - 1);
    const double cell_vol = std::pow(2.0 * R, static_cast<double>(d));
    std::vector<double> coords(d * (2 * p));
    std::vector<PointView> a(p), b(p);
    auto draw = [&](double* dst) {
        for (std::size_t c = 0; c < d; ++c) dst[c] = rng.uniform(-R, R);
    };
    const std::vector<double> origin(d, 0.0);
    std::vector<double> geo(p + 1, 0.0), geo_se(p + 1, 0.0);
    for (std::size_t k = 1; k <= p; ++k) {
        const std::size_t free_vars = 2 * p - k - 1;
        // Layout: w (k-1), z (p-k), v (p-k).
        double s = 0.0, s2 = 0.0;
        for (std::size_t it = 0; it < samples; ++it) {
            for (std::size_t v = 0; v < free_vars; ++v) draw(coords.data() + v * d);
            a[0] = b[0] = PointView(origin.data(), d);
            for (std::size_t j = 0; j + 1 < k; ++j) a[j + 1] = b[j + 1] = PointView(coords.data() + j * d, d);
            for (std::size_t j = 0; j < p - k; ++j) {
                a[k + j] = PointView(coords.data() + (k - 1 + j) * d, d);
                b[k + j] = PointView(coords.data() + (k - 1 + p - k + j) * d, d);
            }
            const double val = (motif_indicator(motif, a, 1.0) && motif_indicator(motif, b, 1.0)) ? 1.0 : 0.0;
            s += val;
            s2 += val * val;
        }
        const double vol = std::pow(cell_vol, static_cast<double>(free_vars));
        const double mean = s / ns;
        geo[k] = vol * mean;
        geo_se[k] = vol * std::sqrt(std::max(0.0, s2 / ns - mean * mean) / ns);
    }
    // nu's geometric factor: one copy of the kernel.
    double s = 0.0, s2 = 0.0;
    for (std::size_t it = 0; it < samples; ++it) {
        for (std::size_t v = 0; v + 1 < p; ++v) draw(coords.data() + v * d);
        a[0] = PointView(origin.data(), d);
        for (std::size_t j = 1; j < p; ++j) a[j] = PointView(coords.data() + (j - 1) * d, d);
        const double val = motif_indicator(motif, a, 1.0) ? 1.0 : 0.0;
        s += val;
        s2 += val * val;
    }
    const double vol_nu = std::pow(cell_vol, static_cast<double>(p - 1));
    const double g_nu = vol_nu * s / ns;
    const double g_nu_se = vol_nu * std::sqrt(std::max(0.0, s2 / ns - (s / ns) * (s / ns)) / ns);

    auto rel = [](double v, double se) { return v != 0.0 ? se / std::abs(v) : 0.0; };
    out.dk.resize(p);
    out.dk_se.resize(p);
    for (std::size_t k = 1; k <= p; ++k) {
        out.dk[k - 1] = I[2 * p - k] * geo[k];
        out.dk_se[k - 1] = std::abs(out.dk[k - 1]) * std::hypot(rel(I[2 * p - k], I_se[2 * p - k]), rel(geo[k], geo_se[k]));
    }
    out.nu = I[p] * g_nu;
    out.nu_se = std::abs(out.nu) * std::hypot(rel(I[p], I_se[p]), rel(g_nu, g_nu_se));
    out.nu_flagged = out.nu + 2.0 * out.nu_se <= 0.0;
    // d_1 - nu^2 = G^2 (E f^{2p-2} - (E f^{p-1})^2), with G^2 the k = 1 geometric integral.
    out.d1_minus_nu2 = geo[1] * var_a;
    out.d1_minus_nu2_se = std::abs(out.d1_minus_nu2) * rel(geo[1], geo_se[1]);
    return out;
}

RegimeParams classify_regime(const std::vector<std::size_t>& n_grid, const RadiusRule& radius, std::size_t d,
                             std::size_t p, bool uniform, double slope_tol, const std::vector<double>& var_g1,
                             double d2) {
    if (n_grid.size() < 2) throw Refusal("classify_regime: need at least two grid points");
    RegimeParams rp;
    std::vector<double> x, y, yp;
    for (std::size_t n : n_grid) {
        const double nn = static_cast<double>(n);
        const double td = std::pow(radius(n), static_cast<double>(d));
        rp.n_td.push_back(nn * td);
        x.push_back(std::log(nn));
        y.push_back(std::log(nn * td));
        yp.push_back(std::log(std::pow(nn, static_cast<double>(p)) * std::pow(td, static_cast<double>(p - 1))));
    }
    rp.slope = fit_line(x, y).slope;
    // t_n^d ~ n^{-a} with a = 1 - slope.
    const double a = 1.0 - rp.slope;
    if (rp.slope < -slope_tol) {
        const double slope_p = fit_line(x, yp).slope;
        if (slope_p <= 0.0) throw Refusal("classify_regime: n^p t_n^{d(p-1)} does not diverge; outside (R1)");
        rp.rcase = RggCase::C1;
        rp.window_ok = a > 1.0 && a < static_cast<double>(p) / static_cast<double>(p - 1);
        if (!rp.window_ok) rp.note = "C1 window (1/n)^{p/(p-1)-delta} << t_n^d << 1/n not met";
    } else if (rp.slope > slope_tol) {
        rp.rcase = uniform ? RggCase::C2 : RggCase::C3;
        if (uniform) {
            rp.window_ok = a > 0.5 && a < 1.0;
            if (!rp.window_ok) rp.note = "C2 window 1/n << t_n^d << n^{-1/2-delta} not met";
            if (!var_g1.empty()) {
                if (var_g1.size() != n_grid.size()) throw Refusal("classify_regime: var_g1 length differs from grid");
                const double fp1 = factorial(p - 1), fp2 = factorial(p - 2);
                for (std::size_t i = 0; i < n_grid.size(); ++i) {
                    const double nn = static_cast<double>(n_grid[i]);
                    const double td = std::pow(radius(n_grid[i]), static_cast<double>(d));
                    const double num = std::pow(nn, 2.0 * p - 1) / (fp1 * fp1) * var_g1[i];
                    const double den = d2 * std::pow(nn, 2.0 * p - 2) * std::pow(td, 2.0 * p - 3) / (2.0 * fp2 * fp2);
                    rp.lambda_trend.push_back(num / den);
                }
                const double last = rp.lambda_trend.back();
                const double prev = rp.lambda_trend[rp.lambda_trend.size() - 2];
                const double change = std::abs(last - prev) / std::max({std::abs(last), std::abs(prev), 1e-300});
                if (change <= 0.1) {
                    rp.lambda = last;
                } else {
                    rp.note = "C2: lambda trend has not settled (last relative change " + std::to_string(change) + ")";
                }
            } else {
                rp.note = "C2: lambda not estimated (no Var g_1 trend supplied)";
            }
        }
    } else {
        rp.rcase = RggCase::C4;
        rp.rho = rp.n_td.back();
    }
    return rp;
}

double c1_constant(const MotifConstants& c, std::size_t p) { return c.dk[p - 1] / factorial(p); }

double c2_constant(const MotifConstants& c, std::size_t p) {
    if (p < 2) throw Refusal("c2_constant: p >= 2");
    const double f = factorial(p - 2);
    return c.dk[1] / (2.0 * f * f);
}

double c3_constant(const MotifConstants& c, std::size_t p) {
    const double f = factorial(p - 1);
    return c.d1_minus_nu2 / (f * f);
}

double c4_constant(const MotifConstants& c, std::size_t p, double rho) {
    double s = 0.0;
    for (std::size_t l = 1; l <= p; ++l) {
        const double f = factorial(p - l);
        const double dl = l == 1 ? c.d1_minus_nu2 : c.dk[l - 1];
        s += std::pow(rho, static_cast<double>(2 * p - l - 1)) * dl / (factorial(l) * f * f);
    }
    return s;
}

double predicted_variance(RggCase rcase, std::size_t n, double t_n, std::size_t d, std::size_t p,
                          const MotifConstants& c, double rho) {
    const double nn = static_cast<double>(n);
    const double td = std::pow(t_n, static_cast<double>(d));
    const double P = static_cast<double>(p);
    switch (rcase) {
        case RggCase::C1: return c1_constant(c, p) * std::pow(nn, P) * std::pow(td, P - 1);
        case RggCase::C2: return c2_constant(c, p) * std::pow(nn, 2 * P - 2) * std::pow(td, 2 * P - 3);
        case RggCase::C3: return c3_constant(c, p) * std::pow(nn, 2 * P - 1) * std::pow(td, 2 * P - 2);
        case RggCase::C4: return c4_constant(c, p, rho) * nn;
    }
    return 0.0;
}

double limit_cov_rgg(const RggCovParams& params, double s, double t) { return rgg_case_cov(params, s, t); }

double edge_probability_unit_cube(std::size_t d, double r) {
    if (r < 0.0) throw Refusal("edge_probability_unit_cube: negative radius");
    if (d == 1) {
        const double x = std::min(r, 1.0);
        return 2.0 * x - x * x;
    }
    if (d == 2) {
        if (r > 1.0) throw Refusal("edge_probability_unit_cube: closed form needs r <= 1 in d = 2");
        return kPi * r * r - 8.0 / 3.0 * r * r * r + 0.5 * r * r * r * r;
    }
    throw Refusal("edge_probability_unit_cube: closed form only for d = 1, 2");
}

double edge_g1_unit_square(double u, double v, double r) {
    // x = u + r sin(th), chord half-length r cos(th) in the v direction.
    const double lo = std::asin(std::max(-1.0, -u / r));
    const double hi = std::asin(std::min(1.0, (1.0 - u) / r));
    const int panels = 400;
    const double h = (hi - lo) / panels;
    double s = 0.0;
    for (int i = 0; i <= panels; ++i) {
        const double th = lo + h * i;
        const double c = std::cos(th);
        const double len = std::max(0.0, std::min(1.0, v + r * c) - std::max(0.0, v - r * c));
        const double f = len * r * c;
        s += (i == 0 || i == panels ? 1.0 : (i % 2 ? 4.0 : 2.0)) * f;
    }
    return s * h / 3.0;
}

double edge_var_g1_unit_cube(std::size_t d, double r) {
    if (!(r > 0.0 && r <= 0.5)) throw Refusal("edge_var_g1_unit_cube: needs 0 < r <= 1/2");
    if (d == 1) return 2.0 * r * r * r / 3.0 - r * r * r * r;
    if (d != 2) throw Refusal("edge_var_g1_unit_cube: only d = 1, 2");
    // h = g_1 - pi r^2 vanishes at distance >= r from the boundary. Near one side
    // h = -seg(distance); the corner squares are integrated numerically.
    const double full = kPi * r * r;
    auto seg = [r](double u) { return r * r * std::acos(u / r) - u * std::sqrt(std::max(0.0, r * r - u * u)); };
    const int m = 200;
    const double step = r / m;
    auto w = [m](int i) { return (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
    double side = 0.0, corner = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double u = step * i;
        const double sg = seg(u);
        side += w(i) * sg * sg;
        for (int j = 0; j <= m; ++j) {
            const double hv = edge_g1_unit_square(u, step * j, r) - full;
            corner += w(i) * w(j) * hv * hv;
        }
    }
    side *= step / 3.0;
    corner *= step * step / 9.0;
    const double int_h2 = 4.0 * (corner + 2.0 * (0.5 - r) * side);
    const double int_h = edge_probability_unit_cube(2, r) - full;
    return std::max(0.0, int_h2 - int_h * int_h);
}

EdgeChangepoint changepoint_edge_stat(const GeometricGraph& g, double eta, double sigma2,
                                      const std::vector<double>& grid) {
    if (!(sigma2 > 0.0)) throw Refusal("changepoint_edge_stat: sigma_n^2 must be positive");
    const std::size_t n = g.points.size();
    // cross[k] = number of edges between {1..k} and {k+1..n}.
    std::vector<double> cross(n + 1, 0.0);
    for (std::size_t k = 1; k <= n; ++k) {
        const auto& nb = g.neighbors[k - 1];
        const auto split = std::lower_bound(nb.begin(), nb.end(), static_cast<std::uint32_t>(k - 1));
        const double before = static_cast<double>(split - nb.begin());
        const double after = static_cast<double>(nb.end() - split);
        cross[k] = cross[k - 1] - before + after;
    }
    const double sigma = std::sqrt(sigma2);
    EdgeChangepoint out;
    out.path = {n, grid, std::vector<double>(grid.size())};
    out.max_neg = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::size_t k = prefix_length(n, grid[i]);
        const double kk = static_cast<double>(k);
        const double v = (cross[k] - eta * kk * (static_cast<double>(n) - kk)) / sigma;
        out.path.values[i] = v;
        if (-v > out.max_neg) {
            out.max_neg = -v;
            out.argmax = grid[i];
        }
    }
    return out;
}

}  // namespace ustat
