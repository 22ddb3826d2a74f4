#include "ustat/fclt_conditions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ustat/errors.hpp"
#include "ustat/limit_processes.hpp"

namespace ustat {

bool q_rules_hold(int i, int k, int r, int l, int p, const Quad& q) {
    const auto [j, m, a, b] = q;
    if (j < 0 || m < 0 || a < 0 || b < 0 || j > p || m > p) return false;
    if (!(j <= i && m <= k)) return false;                       // 1
    if (!(b <= a && a <= r)) return false;                       // 2
    if (!(b <= l)) return false;                                 // 3
    if (!(a - b <= r - l)) return false;                         // 4
    if (!(j + m - a - b <= i + k - r - l && i + k - r - l <= i + k - 1)) return false;  // 5
    if (!(a <= std::min(j, m))) return false;                    // 6
    if (j == p && m == p && !(b == l && a == r && r >= 1)) return false;  // 7
    return true;
}

QuadrupleSet q_set(int i, int k, int r, int l, int p) {
    if (r < 1 || i < 1 || k < 1 || r > p || i > p || k > p || l < 0 || l > r || r > std::min(i, k))
        throw Refusal("q_set: need 1 <= r,i,k <= p and 0 <= l <= r <= min(i,k)");
    QuadrupleSet s{i, k, r, l, p, {}};
    for (int j = 0; j <= p; ++j)
        for (int m = 0; m <= p; ++m)
            for (int a = 0; a <= p; ++a)
                for (int b = 0; b <= a; ++b)
                    if (q_rules_hold(i, k, r, l, p, {j, m, a, b})) s.members.push_back({j, m, a, b});
    return s;
}

RateFit fit_rate(const std::vector<std::size_t>& n_grid, const std::vector<double>& values) {
    if (n_grid.size() != values.size() || n_grid.size() < 2) throw Refusal("fit_rate: grid/value mismatch");
    RateFit f;
    std::vector<double> x, y;
    bool all_zero = true;
    for (std::size_t i = 0; i < values.size(); ++i) {
        double v = values[i];
        if (v > 0.0) all_zero = false;
        if (!(v > 0.0)) {
            v = 1e-300;
            f.floored = true;
        }
        x.push_back(std::log(static_cast<double>(n_grid[i])));
        y.push_back(std::log(v));
    }
    f.all_zero = all_zero;
    const LineFit lf = fit_line(x, y);
    f.slope = lf.slope;
    f.lo = lf.slope_lo;
    f.hi = lf.slope_hi;
    return f;
}

const CheckSeries* ConditionReport::find_remark(const std::string& label) const {
    for (const auto& c : checks)
        if (c.remark == label) return &c;
    return nullptr;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void zero_small(std::vector<double>& v, double tol) {
    for (auto& x : v)
        if (std::abs(x) < tol) x = 0.0;
}

void judge_vanish(CheckSeries& c, const std::vector<std::size_t>& grid, const ConditionOptions& opt) {
    zero_small(c.values, opt.zero_tol);
    c.fit = fit_rate(grid, c.values);
    c.pass = c.fit.all_zero || c.fit.hi < 0.0;
}

void judge_bounded(CheckSeries& c, const std::vector<std::size_t>& grid, const ConditionOptions& opt) {
    zero_small(c.values, opt.zero_tol);
    c.fit = fit_rate(grid, c.values);
    c.eps = -1.0;
    if (c.fit.all_zero) {
        c.eps = opt.eps_grid.empty() ? 0.0 : *std::max_element(opt.eps_grid.begin(), opt.eps_grid.end());
        c.pass = true;
        return;
    }
    for (double eps : opt.eps_grid) {
        std::vector<double> w(c.values.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = c.values[i] * std::pow(static_cast<double>(grid[i]), eps);
        const double mx = *std::max_element(w.begin(), w.end());
        const RateFit f = fit_rate(grid, w);
        // Either not growing at all, or flat within noise without a significant upward trend.
        const bool bounded = f.hi <= 0.0 || (mx <= opt.bounded_ratio * median(w) && f.lo <= 0.0);
        if (bounded) c.eps = std::max(c.eps, eps);
    }
    c.pass = c.eps > 0.0;
}

void finish_report(ConditionReport& rep, const std::vector<std::vector<double>>& a_values, const ConditionOptions& opt) {
    const std::size_t p = rep.p;
    rep.b2.assign(p, 0.0);
    rep.alpha2.assign(p, 0.0);
    rep.b2_trend.assign(p, 0.0);
    bool inconclusive = false;
    for (std::size_t k = 1; k <= p; ++k) {
        std::vector<double> v = a_values[k - 1];
        zero_small(v, opt.zero_tol);
        CheckSeries c;
        c.kind = CheckKind::limit;
        c.id = "a:k=" + std::to_string(k);
        c.v = c.u = static_cast<int>(k);
        c.exponent = static_cast<double>(2 * p - k);
        c.values = v;
        c.fit = fit_rate(rep.n_grid, v);
        double trend = 0.0;
        for (std::size_t i = 1; i < v.size(); ++i) {
            const double scale = std::max(std::abs(v[i]), std::abs(v[i - 1]));
            if (scale > 0.0) trend = std::max(trend, std::abs(v[i] - v[i - 1]) / scale);
        }
        // Sequences heading to 0 have limit 0 even though relative changes stay large.
        const bool to_zero = c.fit.all_zero || (c.fit.hi < 0.0 && v.back() < opt.trend_tol);
        rep.b2[k - 1] = to_zero ? 0.0 : v.back();
        rep.b2_trend[k - 1] = to_zero ? 0.0 : trend;
        double fk = 1.0, fpk = 1.0;
        for (std::size_t i = 2; i <= k; ++i) fk *= static_cast<double>(i);
        for (std::size_t i = 2; i <= p - k; ++i) fpk *= static_cast<double>(i);
        rep.alpha2[k - 1] = rep.b2[k - 1] / (fk * fpk * fpk);
        // Judge convergence on the last step only: early grid points carry finite-n corrections.
        const double last_scale = v.size() > 1 ? std::max(std::abs(v.back()), std::abs(v[v.size() - 2])) : 0.0;
        const double last_change = last_scale > 0.0 ? std::abs(v.back() - v[v.size() - 2]) / last_scale : 0.0;
        c.pass = to_zero || last_change <= opt.trend_tol;
        if (!c.pass) inconclusive = true;
        rep.checks.insert(rep.checks.begin() + static_cast<long>(k - 1), c);
    }
    rep.a_pass = !inconclusive;
    rep.b_pass = rep.c_pass = true;
    rep.eps_min = -1.0;
    for (const auto& c : rep.checks) {
        if (c.kind == CheckKind::vanish && !c.pass) rep.b_pass = false;
        if (c.kind == CheckKind::bounded) {
            if (!c.pass) rep.c_pass = false;
            rep.eps_min = rep.eps_min < 0.0 ? c.eps : std::min(rep.eps_min, c.eps);
        }
    }
    if (!rep.b_pass || !rep.c_pass)
        rep.verdict = "fail";
    else if (!rep.a_pass)
        rep.verdict = "inconclusive";
    else
        rep.verdict = "pass";
}

struct Snapshot {
    ExactHoeffding h;
    std::vector<double> w;
    double sigma2;
};

Snapshot snapshot(const Kernel& k, const Distribution& space, std::size_t n) {
    Snapshot s;
    s.w = space.weights();
    s.h = exact_hoeffding(Table::tabulate(k, space, n), s.w);
    const std::size_t p = k.order;
    std::vector<double> psi2(p + 1), varg(p + 1, 0.0);
    for (std::size_t j = 0; j <= p; ++j) {
        psi2[j] = table_inner(s.h.psi[j], s.h.psi[j], s.w);
        if (j > 0) {
            const double mean = table_expect(s.h.g[j], s.w);
            varg[j] = table_inner(s.h.g[j], s.h.g[j], s.w) - mean * mean;
        }
    }
    s.sigma2 = sigma2_from_components(p, n, s.h.g[0][0], psi2, varg).via_psi;
    return s;
}

Distribution space_for(const Distribution& dist, const EvalMode& mode, const ConditionOptions& opt,
                       std::vector<std::string>& notes) {
    if (mode.is_exact()) {
        if (!dist.is_finite()) throw Refusal("exact mode needs a finite distribution");
        return dist;
    }
    std::ostringstream o;
    o << "Monte Carlo mode: exact computations on an empirical measure of " << opt.plugin_atoms
      << " draws (seed " << mode.seed << ")";
    notes.push_back(o.str());
    return empirical_plugin(dist, opt.plugin_atoms, mode.seed);
}

std::string quad_id(const Quad& q) {
    std::ostringstream o;
    o << "j=" << q.j << ",m=" << q.m << ",a=" << q.a << ",b=" << q.b;
    return o.str();
}

// Labels from the p = 2 checklists, keyed by (kind, quad or (v,u,r,l), exponent).
std::string remark_label_I(CheckKind kind, const Quad& q, double e) {
    auto is = [&](int j, int m, int a, int b, double ex) {
        return ((q.j == j && q.m == m) || (q.j == m && q.m == j)) && q.a == a && q.b == b && std::abs(e - ex) < 1e-12;
    };
    if (kind == CheckKind::vanish) {
        if (is(2, 0, 0, 0, 2.0)) return "1";
        if (is(1, 2, 1, 0, 2.0)) return "2";
        if (is(1, 2, 1, 1, 2.5)) return "3";
        if (is(2, 2, 1, 0, 1.5)) return "4";
        if (is(2, 2, 1, 1, 2.0)) return "5";
        if (is(1, 2, 0, 0, 1.5)) return "6";
    } else {
        if (is(0, 0, 0, 0, 2.5)) return "i";
        if (is(1, 0, 0, 0, 2.5)) return "ii";
        if (is(1, 1, 1, 0, 2.5)) return "iii";
        if (is(2, 2, 2, 0, 1.0)) return "iv";
    }
    return "";
}

std::string remark_label_II(CheckKind kind, int v, int u, int r, int l) {
    if (kind == CheckKind::vanish) {
        if (v == 1 && u == 2 && r == 1 && l == 0) return "1";
        if (v == 1 && u == 2 && r == 1 && l == 1) return "2";
        if (v == 2 && u == 2 && r == 1 && l == 0) return "3";
        if (v == 2 && u == 2 && r == 1 && l == 1) return "4";
    } else {
        if (r == 1 && l == 0) return "i";
        if (r == 2 && l == 0) return "ii";
        if (r == 2 && l == 1) return "iii";
    }
    return "";
}

}  // namespace

Distribution empirical_plugin(const Distribution& dist, std::size_t atoms, std::uint64_t seed) {
    if (dist.is_finite()) return dist;
    RngStream rng(seed, 0x9106ull);
    PointSet pts = dist.sample(atoms, rng);
    std::vector<double> w(atoms, 1.0 / static_cast<double>(atoms));
    double rest = 0.0;
    for (std::size_t i = 0; i + 1 < atoms; ++i) rest += w[i];
    w.back() = 1.0 - rest;
    return Distribution::finite(std::move(pts), std::move(w));
}

ConditionReport check_theorem_I(const Kernel& k, const Distribution& dist, std::size_t p,
                                const std::vector<std::size_t>& n_grid, const EvalMode& mode,
                                const ConditionOptions& opt) {
    if (p == 0 || p > 3) throw Refusal("check_theorem_I: order must be 1..3 (cost guard)");
    if (k.order != p) throw Refusal("check_theorem_I: kernel order differs from p");
    ConditionReport rep;
    rep.theorem = "I";
    rep.p = p;
    rep.n_grid = n_grid;
    const Distribution space = space_for(dist, mode, opt, rep.notes);
    const int P = static_cast<int>(p);

    // Layout of the checks (independent of n).
    struct Spec {
        CheckKind kind;
        int v, u, r, l;
        Quad q;
        double e;
    };
    std::vector<Spec> specs;
    for (int v = 1; v <= P; ++v)
        for (int u = v; u <= P; ++u)
            for (int r = 1; r <= v; ++r)
                for (int l = 0; l <= std::min(r, u + v - r - 1); ++l)
                    for (const auto& q : q_set(v, u, r, l, P).members)
                        specs.push_back({CheckKind::vanish, v, u, r, l, q, 2.0 * P - (u + v + r - l) / 2.0});
    for (int r = 1; r <= P; ++r)
        for (int l = 0; l <= r - 1; ++l)
            for (const auto& q : q_set(r, r, r, l, P).members)
                specs.push_back({CheckKind::bounded, r, r, r, l, q, 2.0 * P - r - (r - l) / 2.0});

    std::vector<std::vector<double>> a_values(p, std::vector<double>(n_grid.size()));
    std::vector<std::vector<double>> values(specs.size(), std::vector<double>(n_grid.size()));
    for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
        const std::size_t n = n_grid[ni];
        const Snapshot s = snapshot(k, space, n);
        if (!(s.sigma2 > 0.0)) throw Refusal("check_theorem_I: sigma_n^2 vanishes at n=" + std::to_string(n));
        rep.sigma2.push_back(s.sigma2);
        const double nn = static_cast<double>(n);
        for (std::size_t kk = 1; kk <= p; ++kk) {
            const double mean = table_expect(s.h.g[kk], s.w);
            const double var = table_inner(s.h.g[kk], s.h.g[kk], s.w) - mean * mean;
            a_values[kk - 1][ni] = std::pow(nn, 2.0 * P - kk) / s.sigma2 * var;
        }
        std::map<std::tuple<int, int, int, int>, double> norms;
        for (std::size_t c = 0; c < specs.size(); ++c) {
            const Quad& q = specs[c].q;
            const auto key = std::make_tuple(q.j, q.m, q.a, q.b);
            auto it = norms.find(key);
            if (it == norms.end()) {
                const ContractionIndex ci{static_cast<std::size_t>(q.a), static_cast<std::size_t>(q.b),
                                          static_cast<std::size_t>(q.j), static_cast<std::size_t>(q.m)};
                it = norms.emplace(key, contraction_norm_exact(s.h.g[q.j], s.h.g[q.m], ci, s.w)).first;
            }
            values[c][ni] = std::pow(nn, specs[c].e) / s.sigma2 * it->second;
        }
    }
    for (std::size_t c = 0; c < specs.size(); ++c) {
        CheckSeries cs;
        const auto& sp = specs[c];
        cs.kind = sp.kind;
        cs.v = sp.v;
        cs.u = sp.u;
        cs.r = sp.r;
        cs.l = sp.l;
        cs.quad = sp.q;
        cs.exponent = sp.e;
        cs.values = values[c];
        std::ostringstream id;
        id << (sp.kind == CheckKind::vanish ? "b" : "c") << ":v=" << sp.v << ",u=" << sp.u << ",r=" << sp.r
           << ",l=" << sp.l << ":" << quad_id(sp.q);
        cs.id = id.str();
        if (p == 2) cs.remark = remark_label_I(sp.kind, sp.q, sp.e);
        if (sp.kind == CheckKind::vanish)
            judge_vanish(cs, n_grid, opt);
        else
            judge_bounded(cs, n_grid, opt);
        rep.checks.push_back(std::move(cs));
    }
    finish_report(rep, a_values, opt);
    return rep;
}

ConditionReport check_theorem_II(const Kernel& k, const Distribution& dist, std::size_t p,
                                 const std::vector<std::size_t>& n_grid, const EvalMode& mode,
                                 const ConditionOptions& opt) {
    if (p == 0 || p > 3) throw Refusal("check_theorem_II: order must be 1..3 (cost guard)");
    if (k.order != p) throw Refusal("check_theorem_II: kernel order differs from p");
    ConditionReport rep;
    rep.theorem = "II";
    rep.p = p;
    rep.n_grid = n_grid;
    const Distribution space = space_for(dist, mode, opt, rep.notes);
    const int P = static_cast<int>(p);
    struct Spec {
        CheckKind kind;
        int v, u, r, l;
        double e;
    };
    std::vector<Spec> specs;
    for (int v = 1; v <= P; ++v)
        for (int u = v; u <= P; ++u)
            for (int r = 1; r <= v; ++r)
                for (int l = 0; l <= std::min(r, u + v - r - 1); ++l)
                    specs.push_back({CheckKind::vanish, v, u, r, l, 2.0 * P - (u + v + r - l) / 2.0});
    for (int r = 1; r <= P; ++r)
        for (int l = 0; l <= r - 1; ++l) specs.push_back({CheckKind::bounded, r, r, r, l, 2.0 * P - r - (r - l) / 2.0});

    std::vector<std::vector<double>> a_values(p, std::vector<double>(n_grid.size()));
    std::vector<std::vector<double>> values(specs.size(), std::vector<double>(n_grid.size()));
    for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
        const std::size_t n = n_grid[ni];
        const Snapshot s = snapshot(k, space, n);
        if (!(s.sigma2 > 0.0)) throw Refusal("check_theorem_II: sigma_n^2 vanishes at n=" + std::to_string(n));
        rep.sigma2.push_back(s.sigma2);
        const double nn = static_cast<double>(n);
        for (std::size_t kk = 1; kk <= p; ++kk)
            a_values[kk - 1][ni] = std::pow(nn, 2.0 * P - kk) / s.sigma2 * table_inner(s.h.psi[kk], s.h.psi[kk], s.w);
        for (std::size_t c = 0; c < specs.size(); ++c) {
            const auto& sp = specs[c];
            const ContractionIndex ci{static_cast<std::size_t>(sp.r), static_cast<std::size_t>(sp.l),
                                      static_cast<std::size_t>(sp.v), static_cast<std::size_t>(sp.u)};
            values[c][ni] = std::pow(nn, sp.e) / s.sigma2 * contraction_norm_exact(s.h.psi[sp.v], s.h.psi[sp.u], ci, s.w);
        }
    }
    for (std::size_t c = 0; c < specs.size(); ++c) {
        CheckSeries cs;
        const auto& sp = specs[c];
        cs.kind = sp.kind;
        cs.v = sp.v;
        cs.u = sp.u;
        cs.r = sp.r;
        cs.l = sp.l;
        cs.exponent = sp.e;
        cs.values = values[c];
        std::ostringstream id;
        id << (sp.kind == CheckKind::vanish ? "b'" : "c'") << ":v=" << sp.v << ",u=" << sp.u << ",r=" << sp.r
           << ",l=" << sp.l;
        cs.id = id.str();
        if (p == 2) cs.remark = remark_label_II(sp.kind, sp.v, sp.u, sp.r, sp.l);
        if (sp.kind == CheckKind::vanish)
            judge_vanish(cs, n_grid, opt);
        else
            judge_bounded(cs, n_grid, opt);
        rep.checks.push_back(std::move(cs));
    }
    finish_report(rep, a_values, opt);
    return rep;
}

ConditionReport check_degenerate(const Kernel& k, const Distribution& dist, std::size_t p,
                                 const std::vector<std::size_t>& n_grid, const EvalMode& mode,
                                 const ConditionOptions& opt) {
    if (k.order != p) throw Refusal("check_degenerate: kernel order differs from p");
    ConditionReport rep;
    rep.theorem = "degenerate";
    rep.p = p;
    rep.n_grid = n_grid;
    const int P = static_cast<int>(p);
    struct Spec {
        CheckKind kind;
        int r, l;
        double e;
    };
    std::vector<Spec> specs;
    for (int r = 1; r <= P; ++r)
        for (int l = 0; l <= std::min(r, 2 * P - r - 1); ++l) specs.push_back({CheckKind::vanish, r, l, (l - r) / 2.0});
    for (int l = 0; l <= P - 1; ++l) specs.push_back({CheckKind::bounded, P, l, (l - P) / 2.0});

    std::vector<std::vector<double>> values(specs.size(), std::vector<double>(n_grid.size()));
    for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
        const std::size_t n = n_grid[ni];
        const double nn = static_cast<double>(n);
        std::map<std::pair<int, int>, double> norms;
        double norm2;
        double residual;
        if (mode.is_exact()) {
            const Table t = Table::tabulate(k, dist, n);
            const auto& w = dist.weights();
            const Table g = integrate_last(t, w, 1);
            residual = 0.0;
            for (double v : g.values()) residual = std::max(residual, std::abs(v));
            norm2 = table_inner(t, t, w);
            for (const auto& sp : specs) {
                const auto key = std::make_pair(sp.r, sp.l);
                if (!norms.count(key))
                    norms[key] = contraction_norm_exact(t, t, {static_cast<std::size_t>(sp.r),
                                                               static_cast<std::size_t>(sp.l), p, p}, w);
            }
        } else {
            residual = check_degeneracy(k, dist, mode, n);
            // |psi|^2 is the (r = l = p) contraction, a constant.
            norm2 = contraction_norm(k, k, {p, p, p, p}, dist, mode, n, opt.budget).value;
            for (const auto& sp : specs) {
                const auto key = std::make_pair(sp.r, sp.l);
                if (!norms.count(key))
                    norms[key] = contraction_norm(k, k, {static_cast<std::size_t>(sp.r), static_cast<std::size_t>(sp.l), p, p},
                                                  dist, mode, n, opt.budget)
                                     .value;
            }
        }
        if (residual > opt.degeneracy_tol * std::max(1.0, std::sqrt(norm2))) {
            std::ostringstream msg;
            msg << "check_degenerate: kernel is not degenerate at n=" << n << " (residual " << residual << ")";
            throw Refusal(msg.str());
        }
        if (!(norm2 > 0.0)) throw Refusal("check_degenerate: kernel has zero norm at n=" + std::to_string(n));
        rep.sigma2.push_back(binom(nn, static_cast<double>(p)) * norm2);
        for (std::size_t c = 0; c < specs.size(); ++c)
            values[c][ni] = std::pow(nn, specs[c].e) * norms[{specs[c].r, specs[c].l}] / norm2;
    }
    for (std::size_t c = 0; c < specs.size(); ++c) {
        CheckSeries cs;
        const auto& sp = specs[c];
        cs.kind = sp.kind;
        cs.r = sp.r;
        cs.l = sp.l;
        cs.v = cs.u = P;
        cs.exponent = sp.e;
        cs.values = values[c];
        cs.id = std::string(sp.kind == CheckKind::vanish ? "ratio" : "bounded") + ":r=" + std::to_string(sp.r) +
                ",l=" + std::to_string(sp.l);
        if (sp.kind == CheckKind::vanish)
            judge_vanish(cs, n_grid, opt);
        else
            judge_bounded(cs, n_grid, opt);
        rep.checks.push_back(std::move(cs));
    }
    // Degenerate kernels: only level p carries variance, so b_p^2 = p! and alpha^2_{p,p} = 1.
    rep.b2.assign(p, 0.0);
    rep.alpha2.assign(p, 0.0);
    rep.b2_trend.assign(p, 0.0);
    double pf = 1.0;
    for (std::size_t i = 2; i <= p; ++i) pf *= static_cast<double>(i);
    rep.b2[p - 1] = pf;
    rep.alpha2[p - 1] = 1.0;
    rep.b_pass = rep.c_pass = true;
    for (const auto& c : rep.checks) {
        if (c.kind == CheckKind::vanish && !c.pass) rep.b_pass = false;
        if (c.kind == CheckKind::bounded) {
            if (!c.pass) rep.c_pass = false;
            rep.eps_min = rep.eps_min < 0.0 ? c.eps : std::min(rep.eps_min, c.eps);
        }
    }
    rep.verdict = (rep.b_pass && rep.c_pass) ? "pass" : "fail";
    if (rep.verdict == "pass") rep.notes.push_back("consistent with W_n => B(t^p)");
    return rep;
}

std::vector<ContractionBound> contraction_bound_table(const ExactHoeffding& h, const std::vector<double>& w) {
    const int P = static_cast<int>(h.psi.size()) - 1;
    std::vector<ContractionBound> out;
    for (int i = 1; i <= P; ++i)
        for (int k = 1; k <= P; ++k)
            for (int r = 1; r <= std::min(i, k); ++r)
                for (int l = 0; l <= r; ++l) {
                    const ContractionIndex ci{static_cast<std::size_t>(r), static_cast<std::size_t>(l),
                                              static_cast<std::size_t>(i), static_cast<std::size_t>(k)};
                    const double lhs = contraction_norm_exact(h.psi[i], h.psi[k], ci, w);
                    double mx = 0.0;
                    for (const auto& q : q_set(i, k, r, l, P).members) {
                        const ContractionIndex qi{static_cast<std::size_t>(q.a), static_cast<std::size_t>(q.b),
                                                  static_cast<std::size_t>(q.j), static_cast<std::size_t>(q.m)};
                        mx = std::max(mx, contraction_norm_exact(h.g[q.j], h.g[q.m], qi, w));
                    }
                    out.push_back({i, k, r, l, lhs, std::ldexp(1.0, i + k) * mx});
                }
    return out;
}

}  // namespace ustat
