#include "ustat/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "ustat/changepoint.hpp"
#include "ustat/diag_dominant.hpp"
#include "ustat/errors.hpp"
#include "ustat/fclt_conditions.hpp"
#include "ustat/finite_table.hpp"
#include "ustat/limit_processes.hpp"
#include "ustat/parallel.hpp"
#include "ustat/product_formula.hpp"
#include "ustat/rgg.hpp"
#include "ustat/ustat.hpp"

namespace ustat {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string join_problems(const std::vector<std::string>& p) {
    std::string s = "invalid config (" + std::to_string(p.size()) + " problem" + (p.size() == 1 ? "" : "s") + ")";
    for (const auto& x : p) s += "\n  " + x;
    return s;
}

// ---------------------------------------------------------------------------
// Typed, path-aware field access that records problems instead of stopping.

struct Problems {
    std::vector<std::string> list;
    void add(const std::string& where, const std::string& what) { list.push_back(where + ": " + what); }
};

class Reader {
public:
    Reader(const Json& j, std::string path, Problems& pr) : j_(j), path_(std::move(path)), pr_(pr) {
        if (!j_.is_object()) pr_.add(path_.empty() ? "<root>" : path_, "must be an object");
    }

    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }
    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    const Json& raw(const std::string& key) const { return j_.at(key); }

    void known(std::initializer_list<const char*> keys) const {
        if (!j_.is_object()) return;
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto& [k, v] : j_.items())
            if (!ok.count(k)) pr_.add(where(k), "unknown field");
    }

    double number(const std::string& key, std::optional<double> def, double lo = -HUGE_VAL, double hi = HUGE_VAL,
                  bool open_lo = false) const {
        if (!has(key)) {
            if (!def) pr_.add(where(key), "required number is missing");
            return def.value_or(lo > -HUGE_VAL ? lo : 0.0);
        }
        const Json& v = j_.at(key);
        if (!v.is_number()) {
            pr_.add(where(key), "must be a number");
            return def.value_or(0.0);
        }
        const double x = v.get<double>();
        if (!(x >= lo && x <= hi) || (open_lo && x == lo)) {
            std::ostringstream m;
            m << "value " << x << " outside " << (open_lo ? "(" : "[") << lo << ", " << hi << "]";
            pr_.add(where(key), m.str());
        }
        return x;
    }

    std::size_t count(const std::string& key, std::optional<std::size_t> def, std::size_t lo = 0,
                      std::size_t hi = static_cast<std::size_t>(-1)) const {
        if (!has(key)) {
            if (!def) pr_.add(where(key), "required integer is missing");
            return def.value_or(lo);
        }
        const Json& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            pr_.add(where(key), "must be a non-negative integer");
            return def.value_or(lo);
        }
        const auto x = v.get<std::size_t>();
        if (x < lo || x > hi) {
            pr_.add(where(key), "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
            return std::clamp(x, lo, hi);
        }
        return x;
    }

    std::string choice(const std::string& key, const std::vector<std::string>& allowed,
                       std::optional<std::string> def) const {
        if (!has(key)) {
            if (!def) pr_.add(where(key), "required string is missing");
            return def.value_or(allowed.front());
        }
        const Json& v = j_.at(key);
        if (!v.is_string()) {
            pr_.add(where(key), "must be a string");
            return def.value_or(allowed.front());
        }
        const auto s = v.get<std::string>();
        if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
            std::string opts;
            for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
            pr_.add(where(key), "'" + s + "' is not one of {" + opts + "}");
            return def.value_or(allowed.front());
        }
        return s;
    }

    bool flag(const std::string& key, bool def) const {
        if (!has(key)) return def;
        if (!j_.at(key).is_boolean()) {
            pr_.add(where(key), "must be true or false");
            return def;
        }
        return j_.at(key).get<bool>();
    }

    std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> def, double lo = -HUGE_VAL,
                                double hi = HUGE_VAL, std::size_t min_len = 1) const {
        if (!has(key)) {
            if (!def) pr_.add(where(key), "required list of numbers is missing");
            return def.value_or(std::vector<double>{});
        }
        const Json& v = j_.at(key);
        std::vector<double> out;
        if (!v.is_array()) {
            pr_.add(where(key), "must be a list of numbers");
            return def.value_or(out);
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) {
                pr_.add(where(key) + "[" + std::to_string(i) + "]", "must be a number");
                continue;
            }
            const double x = v[i].get<double>();
            if (!(x >= lo && x <= hi)) {
                std::ostringstream m;
                m << "value " << x << " outside [" << lo << ", " << hi << "]";
                pr_.add(where(key) + "[" + std::to_string(i) + "]", m.str());
            }
            out.push_back(x);
        }
        if (out.size() < min_len) pr_.add(where(key), "needs at least " + std::to_string(min_len) + " entries");
        return out;
    }

    std::vector<std::size_t> counts(const std::string& key, std::optional<std::vector<std::size_t>> def,
                                    std::size_t lo = 1, std::size_t min_len = 1) const {
        if (!has(key)) {
            if (!def) pr_.add(where(key), "required list of integers is missing");
            return def.value_or(std::vector<std::size_t>{});
        }
        const Json& v = j_.at(key);
        std::vector<std::size_t> out;
        if (!v.is_array()) {
            pr_.add(where(key), "must be a list of integers");
            return def.value_or(out);
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number_integer() || v[i].get<long long>() < static_cast<long long>(lo)) {
                pr_.add(where(key) + "[" + std::to_string(i) + "]", "must be an integer >= " + std::to_string(lo));
                continue;
            }
            out.push_back(v[i].get<std::size_t>());
        }
        if (out.size() < min_len) pr_.add(where(key), "needs at least " + std::to_string(min_len) + " entries");
        return out;
    }

    std::vector<std::string> strings(const std::string& key) const {
        std::vector<std::string> out;
        if (!has(key)) return out;
        const Json& v = j_.at(key);
        if (!v.is_array()) {
            pr_.add(where(key), "must be a list of strings");
            return out;
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_string())
                pr_.add(where(key) + "[" + std::to_string(i) + "]", "must be a string");
            else
                out.push_back(v[i].get<std::string>());
        }
        return out;
    }

    // Child object; a missing optional child reads as an empty object.
    Reader child(const std::string& key, bool required = true) const {
        static const Json empty = Json::object();
        if (!has(key)) {
            if (required) pr_.add(where(key), "required section is missing");
            return Reader(empty, where(key), pr_);
        }
        return Reader(j_.at(key), where(key), pr_);
    }

    Problems& problems() const { return pr_; }

private:
    const Json& j_;
    std::string path_;
    Problems& pr_;
};

bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

bool strictly_increasing(const std::vector<std::size_t>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Shared sections.

std::optional<Distribution> parse_distribution(const Reader& r) {
    const auto kind =
        r.choice("kind", {"finite", "lattice_circle", "cube_uniform", "circle_uniform", "cosine_density"}, std::nullopt);
    const std::size_t before = r.problems().list.size();
    std::optional<Distribution> out;
    if (kind == "finite") {
        r.known({"kind", "atoms", "weights"});
        if (!r.has("atoms") || !r.raw("atoms").is_array() || r.raw("atoms").empty()) {
            r.problems().add(r.where("atoms"), "must be a non-empty list of numbers or of equal-length lists");
            return std::nullopt;
        }
        const Json& a = r.raw("atoms");
        const std::size_t dim = a[0].is_array() ? a[0].size() : 1;
        std::vector<double> coords;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const Json row = a[i].is_array() ? a[i] : Json::array({a[i]});
            if (row.size() != dim || dim == 0) {
                r.problems().add(r.where("atoms") + "[" + std::to_string(i) + "]", "inconsistent dimension");
                continue;
            }
            for (const auto& x : row) {
                if (!x.is_number())
                    r.problems().add(r.where("atoms") + "[" + std::to_string(i) + "]", "must be numeric");
                else
                    coords.push_back(x.get<double>());
            }
        }
        std::vector<double> w = r.numbers("weights", std::vector<double>(a.size(), 1.0 / static_cast<double>(a.size())),
                                          0.0, 1.0);
        if (w.size() != a.size()) r.problems().add(r.where("weights"), "length must match atoms");
        double total = 0.0;
        for (double x : w) total += x;
        if (std::abs(total - 1.0) > 1e-9) r.problems().add(r.where("weights"), "must sum to 1");
        if (r.problems().list.size() == before) out = Distribution::finite(PointSet(dim, coords), w);
    } else if (kind == "lattice_circle") {
        r.known({"kind", "atoms"});
        const std::size_t A = r.count("atoms", std::nullopt, 2, 1u << 16);
        if (r.problems().list.size() == before) {
            std::vector<double> angles(A);
            for (std::size_t j = 0; j < A; ++j) angles[j] = -kPi + 2.0 * kPi * static_cast<double>(j) / static_cast<double>(A);
            out = Distribution::finite_uniform(angles);
        }
    } else if (kind == "cube_uniform") {
        r.known({"kind", "dim", "lo", "hi"});
        const std::size_t d = r.count("dim", 1, 1, 3);
        const double lo = r.number("lo", 0.0), hi = r.number("hi", 1.0);
        if (!(hi > lo)) r.problems().add(r.where("hi"), "must exceed lo");
        if (r.problems().list.size() == before) out = Distribution::cube_uniform(d, lo, hi);
    } else if (kind == "circle_uniform") {
        r.known({"kind"});
        out = Distribution::circle_uniform();
    } else {
        r.known({"kind", "dim", "amplitude"});
        const std::size_t d = r.count("dim", 1, 1, 3);
        const double a = r.number("amplitude", std::nullopt, -0.999, 0.999);
        if (r.problems().list.size() == before) {
            Box box{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
            out = Distribution::density(
                box,
                [a](PointView x) {
                    double f = 1.0;
                    for (double c : x) f *= 1.0 + a * std::cos(2.0 * kPi * c);
                    return f;
                },
                std::pow(1.0 + std::abs(a), static_cast<double>(d)), "cosine_density");
        }
    }
    return out;
}

bool is_unit_uniform(const Json& dist) {
    return dist.value("kind", "") == "cube_uniform" && dist.value("lo", 0.0) == 0.0 && dist.value("hi", 1.0) == 1.0;
}

EvalMode parse_mode(const Reader& r, EvalMode def) {
    r.known({"kind", "M", "seed"});
    const auto kind = r.choice("kind", {"exact", "monte_carlo"}, def.is_exact() ? "exact" : "monte_carlo");
    if (kind == "exact") return EvalMode::exact();
    return EvalMode::monte_carlo(r.count("M", def.M, 10), r.count("seed", def.seed, 0));
}

RadiusRule parse_radius(const Reader& r, double* c_out = nullptr, double* beta_out = nullptr) {
    r.known({"c", "beta"});
    const double c = r.number("c", std::nullopt, 0.0, HUGE_VAL, true);
    const double beta = r.number("beta", std::nullopt, 0.0, 10.0);
    if (c_out) *c_out = c;
    if (beta_out) *beta_out = beta;
    return power_radius(c, beta);
}

std::optional<Kernel> parse_kernel(const Reader& r, const std::optional<Distribution>& dist) {
    r.known({"kind", "order", "value", "values", "radius", "shift", "center"});
    const auto kind = r.choice("kind",
                               {"product", "sum", "indicator_match", "constant", "table", "distance_threshold",
                                "circle_threshold"},
                               std::nullopt);
    const bool pairwise = kind == "distance_threshold" || kind == "circle_threshold";
    const std::size_t p = r.count("order", pairwise ? 2 : 2, 1, 4);
    if (pairwise && p != 2) r.problems().add(r.where("order"), "threshold kernels have order 2");
    const std::size_t before = r.problems().list.size();
    std::optional<Kernel> k;
    if (kind == "product") k = kernels::product(p);
    if (kind == "sum") k = kernels::sum(p);
    if (kind == "indicator_match") k = kernels::indicator_match(p);
    if (kind == "constant") k = kernels::constant(p, r.number("value", std::nullopt));
    if (kind == "table") {
        const auto vals = r.numbers("values", std::nullopt);
        if (!dist || !dist->is_finite()) {
            r.problems().add(r.where("kind"), "table kernels need a finite distribution");
        } else if (vals.size() != ipow(dist->num_atoms(), p)) {
            r.problems().add(r.where("values"), "needs atoms^order = " + std::to_string(ipow(dist->num_atoms(), p)) +
                                                    " entries");
        } else {
            k = kernels::table(*dist, p, vals);
        }
    }
    if (pairwise) {
        const RadiusRule rule = parse_radius(r.child("radius"));
        k = kind == "distance_threshold" ? kernels::distance_threshold(rule) : kernels::circle_threshold(rule);
    }
    if (r.has("shift")) {
        const double c = r.number("shift", 0.0);
        if (k) k = kernels::shifted(*k, [c](std::size_t) { return c; });
    }
    if (r.has("center")) {
        const EvalMode m = parse_mode(r.child("center"), EvalMode::exact());
        if (m.is_exact() && dist && !dist->is_finite())
            r.problems().add(r.where("center.kind"), "exact centring needs a finite distribution");
        if (k && dist && r.problems().list.size() == before) k = center_kernel(*k, *dist, m);
    }
    if (r.problems().list.size() != before) return std::nullopt;
    return k;
}

struct IncrementSpec {
    std::vector<double> deltas;
    double beta = 4.0;
    bool enabled = false;
};

IncrementSpec parse_increments(const Reader& r) {
    IncrementSpec s;
    if (!r.has("increments")) return s;
    const Reader c = r.child("increments");
    c.known({"deltas", "beta"});
    s.deltas = c.numbers("deltas", std::nullopt, 1e-6, 1.0, 2);
    s.beta = c.number("beta", 4.0, 1.0, 16.0);
    s.enabled = true;
    return s;
}

std::vector<double> parse_cov_grid(const Reader& r, const std::string& key = "cov_grid") {
    auto g = r.numbers(key, std::nullopt, 0.0, 1.0);
    if (!strictly_increasing(g)) r.problems().add(r.where(key), "must be strictly increasing");
    for (double x : g)
        if (x <= 0.0) r.problems().add(r.where(key), "entries must be positive");
    return g;
}

struct GridPlan {
    std::vector<double> grid;
    std::vector<std::size_t> cov_idx;
    std::vector<std::pair<std::size_t, std::size_t>> inc_pairs;
};

// Union of the covariance grid, the increment anchors 1 - delta, and t = 1.
// Points are snapped to multiples of 1/n so increment spans are exact.
GridPlan plan_grid(const std::vector<double>& cov, const IncrementSpec& inc, std::size_t n) {
    const double nn = static_cast<double>(n);
    auto snap = [nn](double t) { return std::floor(t * nn + 1e-9) / nn; };
    std::vector<double> pts;
    for (double t : cov) pts.push_back(snap(t));
    pts.push_back(1.0);
    if (inc.enabled)
        for (double d : inc.deltas) pts.push_back(snap(1.0 - d));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    pts.erase(std::remove_if(pts.begin(), pts.end(), [](double t) { return t <= 0.0; }), pts.end());
    GridPlan plan;
    plan.grid = pts;
    auto index_of = [&](double t) {
        return static_cast<std::size_t>(std::lower_bound(pts.begin(), pts.end(), snap(t) - 1e-12) - pts.begin());
    };
    for (double t : cov) plan.cov_idx.push_back(index_of(t));
    if (inc.enabled)
        for (double d : inc.deltas) plan.inc_pairs.emplace_back(index_of(1.0 - d), pts.size() - 1);
    return plan;
}

struct Gates {
    std::optional<double> cov_max_abs, ks_p_min, ks_p_max, increment_exponent_min;
};

Gates parse_fclt_gates(const Reader& r) {
    Gates g;
    if (r.has("cov_max_abs")) g.cov_max_abs = r.number("cov_max_abs", 0.1, 0.0);
    if (r.has("ks_p_min")) g.ks_p_min = r.number("ks_p_min", 0.01, 0.0, 1.0);
    if (r.has("ks_p_max")) g.ks_p_max = r.number("ks_p_max", 0.01, 0.0, 1.0);
    if (r.has("increment_exponent_min")) g.increment_exponent_min = r.number("increment_exponent_min", 1.2);
    return g;
}

// ---------------------------------------------------------------------------
// Condition checks (shared by the condition_check scenario and the fclt_verify add-on).

struct ConditionSpec {
    std::string theorem;
    std::size_t p = 2;
    std::vector<std::size_t> n_grid;
    EvalMode mode;
    ConditionOptions options;
    std::string expect_verdict = "pass";
    std::vector<std::string> failing, passing, flat;
};

ConditionSpec parse_conditions(const Reader& r, std::size_t p_default, bool finite) {
    ConditionSpec c;
    c.theorem = r.choice("theorem", {"I", "II", "degenerate"}, std::nullopt);
    c.p = r.count("p", p_default, 1, 4);
    c.n_grid = r.counts("n_grid", std::nullopt, 2, 3);
    if (!strictly_increasing(c.n_grid)) r.problems().add(r.where("n_grid"), "must be strictly increasing");
    c.mode = parse_mode(r.child("mode", false), finite ? EvalMode::exact() : EvalMode::monte_carlo(4000, 17));
    if (c.mode.is_exact() && !finite) r.problems().add(r.where("mode.kind"), "exact mode needs a finite distribution");
    if (r.has("options")) {
        const Reader o = r.child("options");
        o.known({"eps_grid", "zero_tol", "trend_tol", "bounded_ratio", "degeneracy_tol", "plugin_atoms"});
        c.options.eps_grid = o.numbers("eps_grid", c.options.eps_grid, 0.0, 1.0);
        c.options.zero_tol = o.number("zero_tol", c.options.zero_tol, 0.0);
        c.options.trend_tol = o.number("trend_tol", c.options.trend_tol, 0.0);
        c.options.bounded_ratio = o.number("bounded_ratio", c.options.bounded_ratio, 1.0);
        c.options.degeneracy_tol = o.number("degeneracy_tol", c.options.degeneracy_tol, 0.0);
        c.options.plugin_atoms = o.count("plugin_atoms", c.options.plugin_atoms, 2);
    }
    const Reader g = r.child("gates", false);
    g.known({"verdict", "failing_checks", "passing_checks", "flat_checks"});
    c.expect_verdict = g.choice("verdict", {"pass", "fail", "inconclusive", "any"}, "pass");
    c.failing = g.strings("failing_checks");
    c.passing = g.strings("passing_checks");
    c.flat = g.strings("flat_checks");
    r.known({"theorem", "p", "n_grid", "mode", "options", "gates"});
    return c;
}

const char* kind_name(CheckKind k) {
    switch (k) {
        case CheckKind::limit: return "limit";
        case CheckKind::vanish: return "vanish";
        case CheckKind::bounded: return "bounded";
    }
    return "?";
}

Json run_conditions(const ConditionSpec& c, const Kernel& k, const Distribution& dist, Artifacts& art,
                    const std::string& prefix) {
    ConditionReport rep;
    if (c.theorem == "I")
        rep = check_theorem_I(k, dist, c.p, c.n_grid, c.mode, c.options);
    else if (c.theorem == "II")
        rep = check_theorem_II(k, dist, c.p, c.n_grid, c.mode, c.options);
    else
        rep = check_degenerate(k, dist, c.p, c.n_grid, c.mode, c.options);

    Json j;
    j["theorem"] = rep.theorem;
    j["p"] = rep.p;
    j["n_grid"] = rep.n_grid;
    j["sigma2"] = rep.sigma2;
    j["b2"] = rep.b2;
    j["alpha2"] = rep.alpha2;
    j["b2_trend"] = rep.b2_trend;
    j["a_pass"] = rep.a_pass;
    j["b_pass"] = rep.b_pass;
    j["c_pass"] = rep.c_pass;
    j["eps_min"] = rep.eps_min;
    j["verdict"] = rep.verdict;
    j["notes"] = rep.notes;
    Json checks = Json::array();
    for (const auto& cs : rep.checks) {
        Json e;
        e["id"] = cs.id;
        e["kind"] = kind_name(cs.kind);
        e["v"] = cs.v;
        e["u"] = cs.u;
        e["r"] = cs.r;
        e["l"] = cs.l;
        e["exponent"] = cs.exponent;
        e["slope"] = cs.fit.slope;
        e["slope_ci"] = {cs.fit.lo, cs.fit.hi};
        e["all_zero"] = cs.fit.all_zero;
        e["pass"] = cs.pass;
        if (cs.kind == CheckKind::bounded) e["eps"] = cs.eps;
        if (!cs.remark.empty()) e["remark"] = cs.remark;
        checks.push_back(e);
        for (std::size_t i = 0; i < rep.n_grid.size(); ++i)
            art.checks.push_back({prefix + cs.id, rep.n_grid[i], cs.values[i]});
    }
    for (std::size_t i = 0; i < rep.n_grid.size(); ++i) art.checks.push_back({prefix + "sigma2", rep.n_grid[i], rep.sigma2[i]});
    j["checks"] = checks;

    if (c.expect_verdict != "any") art.gates[prefix + "verdict_" + c.expect_verdict] = rep.verdict == c.expect_verdict;
    auto find = [&](const std::string& id) -> const CheckSeries* {
        for (const auto& cs : rep.checks)
            if (cs.id == id || cs.remark == id) return &cs;
        return nullptr;
    };
    for (const auto& id : c.failing) {
        const auto* cs = find(id);
        art.gates[prefix + "fails:" + id] = cs && !cs->pass;
    }
    for (const auto& id : c.passing) {
        const auto* cs = find(id);
        art.gates[prefix + "passes:" + id] = cs && cs->pass;
    }
    for (const auto& id : c.flat) {
        const auto* cs = find(id);
        art.gates[prefix + "flat:" + id] = cs && !cs->fit.all_zero && cs->fit.lo <= 0.0 && cs->fit.hi >= 0.0;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Ensemble helpers.

Ensemble subset_columns(const Ensemble& e, const std::vector<std::size_t>& idx) {
    Ensemble out(e.size(), std::vector<double>(idx.size()));
    for (std::size_t r = 0; r < e.size(); ++r)
        for (std::size_t i = 0; i < idx.size(); ++i) out[r][i] = e[r][idx[i]];
    return out;
}

// Appends cov rows (s <= t) and returns the largest |empirical - target|.
double compare_cov(const Ensemble& e, const std::vector<double>& grid, const std::vector<std::size_t>& idx,
                   const std::function<double(double, double)>& target, Artifacts& art) {
    const CovEstimate ce = empirical_cov(subset_columns(e, idx));
    double worst = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = i; j < idx.size(); ++j) {
            const double s = grid[idx[i]], t = grid[idx[j]];
            const double tgt = target(s, t);
            const double emp = ce.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            art.cov.push_back({s, t, emp, tgt, ce.se(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
            worst = std::max(worst, std::abs(emp - tgt));
        }
    return worst;
}

void record_paths(const Ensemble& e, const std::vector<double>& grid, Artifacts& art) {
    for (std::size_t r = 0; r < e.size(); ++r)
        for (std::size_t i = 0; i < grid.size(); ++i) art.paths.push_back({r, grid[i], e[r][i]});
}

Json increments_json(const IncrementFit& f) {
    Json j;
    j["exponent"] = f.exponent;
    j["exponent_ci"] = {f.ci_lo, f.ci_hi};
    j["C"] = f.C;
    j["spans"] = f.spans;
    j["moments"] = f.moments;
    j["degenerate"] = f.degenerate;
    return j;
}

void apply_fclt_gates(const Gates& g, double cov_dev, const KsResult* ks, const IncrementFit* inc, Artifacts& art) {
    if (g.cov_max_abs) art.gates["cov_max_abs"] = cov_dev <= *g.cov_max_abs;
    if (ks && g.ks_p_min) art.gates["ks_p_min"] = ks->p_value > *g.ks_p_min;
    if (ks && g.ks_p_max) art.gates["ks_p_max"] = ks->p_value < *g.ks_p_max;
    if (inc && g.increment_exponent_min)
        art.gates["increment_exponent_min"] = !inc->degenerate && inc->exponent >= *g.increment_exponent_min;
}

std::uint64_t stream_tag(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
    return h;
}

// ---------------------------------------------------------------------------
// Scenarios. Each parser fills Problems; the runners assume a clean parse.

struct FcltSpec {
    std::optional<Distribution> dist;
    std::optional<Kernel> kernel;
    std::size_t n = 0, replicates = 0;
    std::uint64_t seed = 0;
    std::vector<double> cov_grid;
    IncrementSpec inc;
    EvalMode sigma_mode;
    LimitSpec limit;
    std::optional<ConditionSpec> conditions;
    Gates gates;
};

FcltSpec parse_fclt(const Reader& r) {
    FcltSpec s;
    r.known({"scenario", "seed", "distribution", "kernel", "n", "replicates", "cov_grid", "increments", "sigma2",
             "limit", "conditions", "gates"});
    s.seed = r.count("seed", std::nullopt);
    s.dist = parse_distribution(r.child("distribution"));
    s.kernel = parse_kernel(r.child("kernel"), s.dist);
    const std::size_t p = s.kernel ? s.kernel->order : 2;
    s.n = r.count("n", std::nullopt, 2);
    s.replicates = r.count("replicates", std::nullopt, 10);
    s.cov_grid = parse_cov_grid(r);
    s.inc = parse_increments(r);
    const bool finite = s.dist && s.dist->is_finite();
    s.sigma_mode = parse_mode(r.child("sigma2", false), finite ? EvalMode::exact() : EvalMode::monte_carlo(4000, s.seed + 1));
    if (s.sigma_mode.is_exact() && !finite) r.problems().add(r.where("sigma2.kind"), "exact mode needs a finite distribution");
    const Reader lim = r.child("limit", false);
    lim.known({"kind", "alpha2"});
    const auto lk = lim.choice("kind", {"time_changed_bm", "general"}, "time_changed_bm");
    if (lk == "general") {
        const auto a = lim.numbers("alpha2", std::nullopt, 0.0);
        if (a.size() != p) r.problems().add(lim.where("alpha2"), "needs one entry per level k = 1..p");
        s.limit = LimitSpec::general(p, a);
    } else {
        s.limit = LimitSpec::time_changed_bm(p);
    }
    if (r.has("conditions")) s.conditions = parse_conditions(r.child("conditions"), p, finite);
    const Reader g = r.child("gates", false);
    g.known({"cov_max_abs", "ks_p_min", "ks_p_max", "increment_exponent_min"});
    s.gates = parse_fclt_gates(g);
    return s;
}

Artifacts run_fclt(const FcltSpec& s, std::size_t workers) {
    Artifacts art;
    Json res;
    const Kernel& k = *s.kernel;
    const Distribution& dist = *s.dist;
    const std::size_t p = k.order;
    const GridPlan plan = plan_grid(s.cov_grid, s.inc, s.n);
    const Sigma2 sig = variance_sigma2(k, dist, s.n, s.sigma_mode);
    if (!(sig.via_g > 0.0)) throw Refusal("fclt_verify: sigma_n^2 is not positive");
    const RngStream base(s.seed, stream_tag("fclt"));
    Ensemble paths(s.replicates, std::vector<double>(plan.grid.size()));
    parallel_for(s.replicates, workers, [&](std::size_t r) {
        RngStream rng = base.split(r);
        const PointSet sample = dist.sample(s.n, rng);
        const SequentialPath raw = sequential_upath(k, sample, plan.grid, s.n);
        const SequentialPath w = normalize_path(raw, p, sig.g0, sig.via_g);
        paths[r] = w.values;
    });
    const double dev = compare_cov(paths, plan.grid, plan.cov_idx,
                                   [&](double a, double b) { return limit_cov(s.limit, a, b); }, art);
    std::vector<double> at_one;
    for (const auto& row : paths) at_one.push_back(row.back());
    const KsResult ks = ks_test(at_one, normal_cdf);
    res["sigma2"] = {{"via_g", sig.via_g}, {"via_psi", sig.via_psi}, {"g0", sig.g0}, {"var_g", sig.var_g},
                     {"psi_norm2", sig.psi_norm2}};
    res["limit"] = s.limit.describe();
    res["cov_max_abs_dev"] = dev;
    res["ks_w1"] = {{"statistic", ks.statistic}, {"p_value", ks.p_value}};
    art.checks.push_back({"cov_max_abs_dev", s.n, dev});
    art.checks.push_back({"ks_w1_statistic", s.n, ks.statistic});
    art.checks.push_back({"ks_w1_p_value", s.n, ks.p_value});
    std::optional<IncrementFit> inc;
    if (s.inc.enabled) {
        inc = increment_moment_diag(paths, plan.grid, s.n, plan.inc_pairs, s.inc.beta);
        res["increments"] = increments_json(*inc);
        art.checks.push_back({"increment_exponent", s.n, inc->exponent});
    }
    if (s.conditions) res["conditions"] = run_conditions(*s.conditions, k, dist, art, "conditions:");
    record_paths(paths, plan.grid, art);
    apply_fclt_gates(s.gates, dev, &ks, inc ? &*inc : nullptr, art);
    art.report["results"] = res;
    return art;
}

struct CheckSpec {
    std::optional<Distribution> dist;
    std::optional<Kernel> kernel;
    ConditionSpec cond;
};

CheckSpec parse_check(const Reader& r) {
    CheckSpec s;
    r.known({"scenario", "seed", "distribution", "kernel", "conditions"});
    s.dist = parse_distribution(r.child("distribution"));
    s.kernel = parse_kernel(r.child("kernel"), s.dist);
    s.cond = parse_conditions(r.child("conditions"), s.kernel ? s.kernel->order : 2, s.dist && s.dist->is_finite());
    if (s.kernel && s.cond.p != s.kernel->order)
        r.problems().add(r.where("conditions.p"), "must equal the kernel order");
    return s;
}

Artifacts run_check(const CheckSpec& s) {
    Artifacts art;
    art.report["results"]["conditions"] = run_conditions(s.cond, *s.kernel, *s.dist, art, "");
    return art;
}

// --- random geometric graphs -------------------------------------------------

struct RggSpec {
    std::optional<Distribution> dist;
    bool unit_uniform = false;
    std::size_t d = 2;
    std::optional<MotifPattern> motif;
    RadiusRule radius;
    double c = 1.0, beta = 0.5;
    std::string regime;
    std::vector<std::size_t> n_grid;
    std::size_t n = 0, replicates = 0, constants_samples = 0, sigma_M = 0;
    std::uint64_t seed = 0;
    std::vector<double> cov_grid;
    IncrementSpec inc;
    std::optional<double> stabilize_rel, cov_max_abs;
};

std::optional<MotifPattern> parse_motif(const Reader& r) {
    r.known({"p", "edges"});
    const std::size_t p = r.count("p", 2, 2, 4);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    if (!r.has("edges") || !r.raw("edges").is_array()) {
        r.problems().add(r.where("edges"), "must be a list of [i, j] pairs");
        return std::nullopt;
    }
    for (const auto& e : r.raw("edges")) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned()) {
            r.problems().add(r.where("edges"), "each edge must be [i, j] with non-negative integers");
            return std::nullopt;
        }
        edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
    }
    try {
        return MotifPattern::from_edges(p, edges);
    } catch (const std::exception& ex) {
        r.problems().add(r.where("edges"), ex.what());
        return std::nullopt;
    }
}

RggSpec parse_rgg(const Reader& r) {
    RggSpec s;
    r.known({"scenario", "seed", "distribution", "motif", "radius", "regime", "n_grid", "n", "replicates", "cov_grid",
             "increments", "constants_samples", "sigma2_M", "gates"});
    s.seed = r.count("seed", std::nullopt);
    const Reader dr = r.child("distribution");
    s.dist = parse_distribution(dr);
    if (s.dist && s.dist->is_finite()) r.problems().add(dr.where("kind"), "random geometric graphs need a continuous law");
    if (s.dist && s.dist->kind() == DistKind::circle_uniform)
        r.problems().add(dr.where("kind"), "use cube_uniform or cosine_density");
    if (r.has("distribution") && r.raw("distribution").is_object()) s.unit_uniform = is_unit_uniform(r.raw("distribution"));
    s.d = s.dist ? s.dist->dim() : 2;
    s.motif = parse_motif(r.child("motif"));
    s.radius = parse_radius(r.child("radius"), &s.c, &s.beta);
    s.regime = r.choice("regime", {"C1", "C2", "C3", "C4"}, std::nullopt);
    s.n_grid = r.counts("n_grid", std::nullopt, 4, 2);
    if (!strictly_increasing(s.n_grid)) r.problems().add(r.where("n_grid"), "must be strictly increasing");
    s.n = r.count("n", std::nullopt, 4);
    s.replicates = r.count("replicates", std::nullopt, 10);
    s.cov_grid = parse_cov_grid(r);
    s.inc = parse_increments(r);
    s.constants_samples = r.count("constants_samples", 200000, 1000);
    s.sigma_M = r.count("sigma2_M", 20000, 100);
    const Reader g = r.child("gates", false);
    g.known({"variance_stabilize_rel", "cov_max_abs"});
    if (g.has("variance_stabilize_rel")) s.stabilize_rel = g.number("variance_stabilize_rel", 0.1, 0.0);
    if (g.has("cov_max_abs")) s.cov_max_abs = g.number("cov_max_abs", 0.1, 0.0);
    return s;
}

RggCase case_of(const std::string& s) {
    if (s == "C1") return RggCase::C1;
    if (s == "C2") return RggCase::C2;
    if (s == "C3") return RggCase::C3;
    return RggCase::C4;
}

// Mean and variance of the motif count G_n(1) with the sigma^2 display. Edges on
// the unit cube use exact g_0 and quadrature Var g_1; other cases use Monte Carlo components.
Sigma2 rgg_sigma2(const RggSpec& s, std::size_t n, const Kernel& mk) {
    const double t = s.radius(n);
    if (s.unit_uniform && s.motif->p() == 2 && s.d <= 2 && t <= 0.5) {
        const double g0 = edge_probability_unit_cube(s.d, t);
        const double v1 = edge_var_g1_unit_cube(s.d, t);
        const double v2 = g0 * (1.0 - g0);
        return sigma2_from_components(2, n, g0, {g0 * g0, v1, v2 - 2.0 * v1}, {0.0, v1, v2});
    }
    return variance_sigma2(mk, *s.dist, n, EvalMode::monte_carlo(s.sigma_M, s.seed + n));
}

Artifacts run_rgg(const RggSpec& s, std::size_t workers) {
    Artifacts art;
    Json res;
    const MotifPattern& motif = *s.motif;
    const std::size_t p = motif.p();
    const Kernel mk = motif_kernel(motif, s.radius);
    RngStream crng(s.seed, stream_tag("rgg-constants"));
    const MotifConstants mc = estimate_dk_nu(*s.dist, motif, s.constants_samples, crng);
    const RggCase rc = case_of(s.regime);
    const double rho = std::pow(s.c, static_cast<double>(s.d));
    res["constants"] = {{"dk", mc.dk}, {"dk_se", mc.dk_se}, {"nu", mc.nu}, {"nu_se", mc.nu_se},
                        {"d1_minus_nu2", mc.d1_minus_nu2}, {"nu_flagged", mc.nu_flagged}};
    const RegimeParams regime = classify_regime(s.n_grid, s.radius, s.d, p, s.unit_uniform);
    const char* names[] = {"C1", "C2", "C3", "C4"};
    res["regime"] = {{"configured", s.regime}, {"classified", names[static_cast<int>(regime.rcase)]},
                     {"n_td", regime.n_td}, {"slope", regime.slope}, {"window_ok", regime.window_ok},
                     {"note", regime.note}};
    // The configured case selects the limit covariance, so it has to agree with the grid.
    art.gates["regime_matches"] = regime.rcase == rc;

    std::vector<std::size_t> ns = s.n_grid;
    if (std::find(ns.begin(), ns.end(), s.n) == ns.end()) ns.push_back(s.n);
    std::sort(ns.begin(), ns.end());
    Json vrows = Json::array();
    std::vector<double> ratios;
    for (std::size_t n : ns) {
        const GridPlan plan = plan_grid(s.cov_grid, s.inc, n);
        const double t = s.radius(n);
        const RngStream base(s.seed, hash_combine(stream_tag("rgg"), n));
        Ensemble counts(s.replicates);
        parallel_for(s.replicates, workers, [&](std::size_t r) {
            RngStream rng = base.split(r);
            const GeometricGraph g = build_graph(s.dist->sample(n, rng), t);
            counts[r] = count_motifs_sequential(g, motif, plan.grid).values;
        });
        double mean = 0.0, m2 = 0.0;
        for (const auto& c : counts) mean += c.back();
        mean /= static_cast<double>(s.replicates);
        for (const auto& c : counts) m2 += (c.back() - mean) * (c.back() - mean);
        const double var = m2 / static_cast<double>(s.replicates - 1);
        const double pred = predicted_variance(rc, n, t, s.d, p, mc, rho);
        const Sigma2 sig = rgg_sigma2(s, n, mk);
        ratios.push_back(var / pred);
        vrows.push_back({{"n", n}, {"t_n", t}, {"mean", mean}, {"var", var}, {"predicted", pred},
                         {"ratio", var / pred}, {"sigma2_display", sig.via_g}, {"g0", sig.g0}});
        art.checks.push_back({"var_ratio", n, var / pred});
        art.checks.push_back({"var_over_sigma2_display", n, var / sig.via_g});
        if (n != s.n) continue;
        Ensemble w(s.replicates, std::vector<double>(plan.grid.size()));
        const double sd = std::sqrt(sig.via_g);
        for (std::size_t r = 0; r < s.replicates; ++r)
            for (std::size_t i = 0; i < plan.grid.size(); ++i) {
                const double m = static_cast<double>(prefix_length(n, plan.grid[i]));
                w[r][i] = (counts[r][i] - binom(m, static_cast<double>(p)) * sig.g0) / sd;
            }
        RggCovParams cp;
        cp.rcase = rc;
        cp.p = p;
        cp.rho = rho;
        cp.dk = mc.dk;
        cp.nu = mc.nu;
        if (rc == RggCase::C2) cp.lambda = std::isnan(regime.lambda) ? 1.0 : regime.lambda;
        const double dev = compare_cov(w, plan.grid, plan.cov_idx,
                                       [&](double a, double b) { return limit_cov_rgg(cp, a, b); }, art);
        res["cov_max_abs_dev"] = dev;
        art.checks.push_back({"cov_max_abs_dev", n, dev});
        if (s.cov_max_abs) art.gates["cov_max_abs"] = dev <= *s.cov_max_abs;
        if (s.inc.enabled) {
            const IncrementFit f = increment_moment_diag(w, plan.grid, n, plan.inc_pairs, s.inc.beta);
            res["increments"] = increments_json(f);
            art.checks.push_back({"increment_exponent", n, f.exponent});
        }
        record_paths(w, plan.grid, art);
    }
    res["variance"] = vrows;
    // Stabilisation is judged on the configured grid only.
    std::vector<double> grid_ratios;
    for (std::size_t i = 0; i < ns.size(); ++i)
        if (std::find(s.n_grid.begin(), s.n_grid.end(), ns[i]) != s.n_grid.end()) grid_ratios.push_back(ratios[i]);
    const double a = grid_ratios[grid_ratios.size() - 2], b = grid_ratios.back();
    const double rel = std::abs(b - a) / std::abs(b);
    res["variance_last_two_rel_change"] = rel;
    if (s.stabilize_rel) art.gates["variance_stabilizes"] = rel <= *s.stabilize_rel;
    art.report["results"] = res;
    return art;
}

// --- changepoint -------------------------------------------------------------

struct ChangepointSpec {
    std::string statistic;
    std::uint64_t seed = 0;
    std::size_t n = 0, replicates = 0;
    std::vector<double> cov_grid;
    // U-statistic variant
    std::optional<Distribution> dist;
    std::optional<Kernel> kernel;
    EvalMode mode;
    std::vector<std::size_t> trend_grid;
    double center_tol = 1e-9;
    // edge variant
    std::size_t d = 2;
    RadiusRule radius;
    std::optional<double> cov_max_abs, ks_kolmogorov_max, ks_uniform_max;
    bool require_c2_to_zero = false;
};

ChangepointSpec parse_changepoint(const Reader& r) {
    ChangepointSpec s;
    s.statistic = r.choice("statistic", {"ustat", "edge"}, "ustat");
    s.seed = r.count("seed", std::nullopt);
    s.n = r.count("n", std::nullopt, 4);
    s.replicates = r.count("replicates", std::nullopt, 10);
    s.cov_grid = parse_cov_grid(r);
    const Reader g = r.child("gates", false);
    if (s.statistic == "ustat") {
        r.known({"scenario", "statistic", "seed", "n", "replicates", "cov_grid", "distribution", "kernel", "mode",
                 "trend_n_grid", "center_tol", "gates"});
        s.dist = parse_distribution(r.child("distribution"));
        s.kernel = parse_kernel(r.child("kernel"), s.dist);
        if (s.kernel && s.kernel->order != 2) r.problems().add(r.where("kernel.order"), "changepoint kernels have order 2");
        const bool finite = s.dist && s.dist->is_finite();
        s.mode = parse_mode(r.child("mode", false), finite ? EvalMode::exact() : EvalMode::monte_carlo(20000, s.seed + 7));
        s.trend_grid = r.counts("trend_n_grid", std::vector<std::size_t>{100, 1000, 10000, 100000}, 4, 2);
        if (!strictly_increasing(s.trend_grid)) r.problems().add(r.where("trend_n_grid"), "must be strictly increasing");
        s.center_tol = r.number("center_tol", 1e-9, 0.0);
        g.known({"cov_max_abs", "c2_to_zero"});
        s.require_c2_to_zero = g.flag("c2_to_zero", false);
    } else {
        r.known({"scenario", "statistic", "seed", "n", "replicates", "cov_grid", "dim", "radius", "gates"});
        s.d = r.count("dim", 2, 1, 2);
        s.radius = parse_radius(r.child("radius"));
        g.known({"cov_max_abs", "ks_kolmogorov_max", "ks_uniform_max"});
        if (g.has("ks_kolmogorov_max")) s.ks_kolmogorov_max = g.number("ks_kolmogorov_max", 0.08, 0.0, 1.0);
        if (g.has("ks_uniform_max")) s.ks_uniform_max = g.number("ks_uniform_max", 0.08, 0.0, 1.0);
    }
    if (g.has("cov_max_abs")) s.cov_max_abs = g.number("cov_max_abs", 0.1, 0.0);
    return s;
}

Artifacts run_changepoint_ustat(const ChangepointSpec& s, std::size_t workers) {
    Artifacts art;
    Json res;
    std::string notice;
    const Kernel k = ensure_centered(*s.kernel, *s.dist, s.mode, s.n, s.center_tol, &notice);
    if (!notice.empty()) res["centering"] = notice;
    std::vector<std::size_t> ns = s.trend_grid;
    if (std::find(ns.begin(), ns.end(), s.n) == ns.end()) ns.push_back(s.n);
    std::sort(ns.begin(), ns.end());
    const CTrend tr = estimate_c(k, *s.dist, ns, s.mode);
    const auto at = static_cast<std::size_t>(std::find(ns.begin(), ns.end(), s.n) - ns.begin());
    const double g1 = tr.gamma1_sq[at], g2 = tr.gamma2_sq[at], gn = tr.gamma_n_sq[at];
    for (std::size_t i = 0; i < ns.size(); ++i) {
        art.checks.push_back({"c1_sq", ns[i], tr.c1_sq[i]});
        art.checks.push_back({"c2_sq", ns[i], tr.c2_sq[i]});
        art.checks.push_back({"gamma_n_sq", ns[i], tr.gamma_n_sq[i]});
    }
    res["c_trend"] = {{"n_grid", ns}, {"c1_sq", tr.c1_sq}, {"c2_sq", tr.c2_sq}, {"c1_sq_limit", tr.c1_sq_limit},
                      {"c2_sq_limit", tr.c2_sq_limit}, {"c2_to_zero", tr.c2_to_zero}, {"c1_to_zero", tr.c1_to_zero},
                      {"gamma1_sq", g1}, {"gamma2_sq", g2}, {"gamma_n_sq", gn}};
    const RngStream base(s.seed, stream_tag("changepoint"));
    const std::vector<double>& grid = s.cov_grid;
    Ensemble paths(s.replicates);
    parallel_for(s.replicates, workers, [&](std::size_t r) {
        RngStream rng = base.split(r);
        paths[r] = ystat_path(k, s.dist->sample(s.n, rng), grid, gn, s.n).normalized;
    });
    std::vector<std::size_t> idx(grid.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // Limit target c1^2 A + c2^2 b scaled to unit variance at t = 1/2.
    const double c1 = tr.c1_sq_limit, c2 = tr.c2_sq_limit;
    auto target = [&](double a, double b) {
        return (c1 * a_process_cov(a, b) + c2 * bridge_cov(a, b)) / (c1 * a_process_cov(0.5, 0.5) + c2 * bridge_cov(0.5, 0.5));
    };
    const double dev = compare_cov(paths, grid, idx, target, art);
    double finite_dev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = i; j < grid.size(); ++j) {
            const double exact = ycov_exact(g1, g2, s.n, grid[i], grid[j]) / gn;
            finite_dev = std::max(finite_dev, std::abs(exact - target(grid[i], grid[j])));
        }
    res["cov_max_abs_dev"] = dev;
    res["finite_n_target_vs_limit_max_abs"] = finite_dev;
    art.checks.push_back({"cov_max_abs_dev", s.n, dev});
    if (s.cov_max_abs) art.gates["cov_max_abs"] = dev <= *s.cov_max_abs;
    if (s.require_c2_to_zero) art.gates["c2_to_zero"] = tr.c2_to_zero;
    record_paths(paths, grid, art);
    art.report["results"] = res;
    return art;
}

Artifacts run_changepoint_edge(const ChangepointSpec& s, std::size_t workers) {
    Artifacts art;
    Json res;
    const std::size_t n = s.n;
    const double t = s.radius(n);
    if (t > 0.5) throw Refusal("edge changepoint: radius above 1/2 at n=" + std::to_string(n));
    const double eta = edge_probability_unit_cube(s.d, t);
    const Distribution dist = Distribution::cube_uniform(s.d);
    std::vector<double> full(n);
    for (std::size_t j = 0; j < n; ++j) full[j] = static_cast<double>(j + 1) / static_cast<double>(n);
    const RngStream base(s.seed, stream_tag("edge-changepoint"));
    Ensemble raw(s.replicates);
    std::vector<double> edges(s.replicates), argmax(s.replicates), maxneg(s.replicates);
    parallel_for(s.replicates, workers, [&](std::size_t r) {
        RngStream rng = base.split(r);
        const GeometricGraph g = build_graph(dist.sample(n, rng), t);
        const EdgeChangepoint ec = changepoint_edge_stat(g, eta, 1.0, full);
        raw[r] = ec.path.values;
        edges[r] = static_cast<double>(g.edge_count());
        maxneg[r] = ec.max_neg;
        argmax[r] = ec.argmax;
    });
    // sigma_n^2 = Var G_n(edge) from the replicates.
    double mean = 0.0, m2 = 0.0;
    for (double e : edges) mean += e;
    mean /= static_cast<double>(s.replicates);
    for (double e : edges) m2 += (e - mean) * (e - mean);
    const double sigma2 = m2 / static_cast<double>(s.replicates - 1);
    const double sd = std::sqrt(sigma2);
    std::vector<double> m_scaled, a_vals = argmax;
    for (double m : maxneg) m_scaled.push_back(m / sd / std::sqrt(2.0));
    const KsResult ks_kol = ks_test(m_scaled, kolmogorov_cdf);
    const KsResult ks_unif = ks_test(a_vals, [](double x) { return std::clamp(x, 0.0, 1.0); });
    // Law of sup_t b(t) (one-sided), for comparison with the two-sided Kolmogorov law.
    const KsResult ks_sup = ks_test(m_scaled, [](double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-2.0 * x * x); });
    std::vector<std::size_t> idx;
    for (double c : s.cov_grid) idx.push_back(prefix_length(n, c) - 1);
    Ensemble w(s.replicates, std::vector<double>(idx.size()));
    std::vector<double> cgrid;
    for (std::size_t i : idx) cgrid.push_back(full[i]);
    for (std::size_t r = 0; r < s.replicates; ++r)
        for (std::size_t i = 0; i < idx.size(); ++i) w[r][i] = raw[r][idx[i]] / sd;
    std::vector<std::size_t> all(idx.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const double dev = compare_cov(w, cgrid, all, [](double a, double b) { return 2.0 * bridge_cov(a, b); }, art);
    res["eta_n"] = eta;
    res["t_n"] = t;
    res["sigma2_replicates"] = sigma2;
    res["sigma2_leading"] = binom(static_cast<double>(n), 2.0) * eta;
    res["ks_m_over_sqrt2_vs_kolmogorov"] = {{"statistic", ks_kol.statistic}, {"p_value", ks_kol.p_value}};
    res["ks_argmax_vs_uniform"] = {{"statistic", ks_unif.statistic}, {"p_value", ks_unif.p_value}};
    res["ks_m_over_sqrt2_vs_sup_bridge"] = {{"statistic", ks_sup.statistic}, {"p_value", ks_sup.p_value}};
    res["cov_max_abs_dev"] = dev;
    art.checks.push_back({"ks_kolmogorov_distance", n, ks_kol.statistic});
    art.checks.push_back({"ks_uniform_distance", n, ks_unif.statistic});
    art.checks.push_back({"ks_sup_bridge_distance", n, ks_sup.statistic});
    art.checks.push_back({"cov_max_abs_dev", n, dev});
    if (s.ks_kolmogorov_max) art.gates["ks_kolmogorov_max"] = ks_kol.statistic <= *s.ks_kolmogorov_max;
    if (s.ks_uniform_max) art.gates["ks_uniform_max"] = ks_unif.statistic <= *s.ks_uniform_max;
    if (s.cov_max_abs) art.gates["cov_max_abs"] = dev <= *s.cov_max_abs;
    record_paths(w, cgrid, art);
    art.report["results"] = res;
    return art;
}

// --- diagonal-dominant -------------------------------------------------------

struct DiagSpec {
    DiagFamily fam;
    DiagOptions opt;
    std::vector<std::size_t> n_grid;
    std::size_t n = 0, replicates = 0;
    std::uint64_t seed = 0;
    std::vector<double> cov_grid;
    IncrementSpec inc;
    std::optional<double> sigma_lo, sigma_hi, cov_max_abs, inc_min;
    bool require_trends = false;
};

DiagSpec parse_diag(const Reader& r) {
    DiagSpec s;
    r.known({"scenario", "seed", "family", "options", "n_grid", "n", "replicates", "cov_grid", "increments", "gates"});
    s.seed = r.count("seed", std::nullopt);
    const Reader f = r.child("family");
    f.known({"kind", "kn_exponent", "kn", "density_amplitude"});
    const auto kind = f.choice("kind", {"dirichlet", "haar"}, std::nullopt);
    s.fam.kind = kind == "haar" ? DiagFamily::Kind::haar : DiagFamily::Kind::dirichlet;
    s.fam.kn_exponent = f.number("kn_exponent", 1.5, 1.0, 3.0, true);
    s.fam.kn_nlogn = f.choice("kn", {"power", "nlogn"}, "power") == "nlogn";
    s.fam.haar_density_amp = f.number("density_amplitude", 0.0, -0.999, 0.999);
    if (s.fam.kind == DiagFamily::Kind::dirichlet && s.fam.haar_density_amp != 0.0)
        f.problems().add(f.where("density_amplitude"), "only the Haar family takes a density");
    if (r.has("options")) {
        const Reader o = r.child("options");
        o.known({"eps1", "eps2", "alpha1", "alpha2", "power_iter_cap"});
        s.opt.eps1 = o.number("eps1", s.opt.eps1, 0.0, 0.5);
        s.opt.eps2 = o.number("eps2", s.opt.eps2, 0.0, 1.0);
        s.opt.alpha1 = o.number("alpha1", s.opt.alpha1, 0.0, 1.0);
        s.opt.alpha2 = o.number("alpha2", s.opt.alpha2, 0.0, 1.0);
        s.opt.power_iter_cap = o.count("power_iter_cap", s.opt.power_iter_cap, 0);
    }
    s.n_grid = r.counts("n_grid", std::nullopt, 4, 2);
    if (!strictly_increasing(s.n_grid)) r.problems().add(r.where("n_grid"), "must be strictly increasing");
    s.n = r.count("n", std::nullopt, 4);
    s.replicates = r.count("replicates", std::nullopt, 10);
    s.cov_grid = parse_cov_grid(r);
    s.inc = parse_increments(r);
    const Reader g = r.child("gates", false);
    g.known({"sigma_ratio_min", "sigma_ratio_max", "cov_max_abs", "trends", "increment_exponent_min"});
    if (g.has("sigma_ratio_min")) s.sigma_lo = g.number("sigma_ratio_min", 0.8, 0.0);
    if (g.has("sigma_ratio_max")) s.sigma_hi = g.number("sigma_ratio_max", 1.2, 0.0);
    if (g.has("cov_max_abs")) s.cov_max_abs = g.number("cov_max_abs", 0.1, 0.0);
    if (g.has("increment_exponent_min")) s.inc_min = g.number("increment_exponent_min", 1.2);
    s.require_trends = g.flag("trends", false);
    return s;
}

Json quantities_json(const DiagQuantities& q) {
    return {{"n", q.n}, {"param", q.param}, {"kn_nominal", q.kn_nominal}, {"kn", q.kn}, {"kn_over_n", q.kn_over_n},
            {"M", q.M}, {"max_measure", q.max_measure}, {"min_measure", q.min_measure}, {"diag_mass", q.diag_mass},
            {"max_cell_mass", q.max_cell_mass}, {"measure_kn_over_n", q.measure_kn_over_n},
            {"n_min_measure", q.n_min_measure}, {"op_norm", q.op_norm}, {"op_norm_numeric", q.op_norm_numeric},
            {"sup_over_kn", q.sup_over_kn}, {"e7", q.e7}, {"e71a", q.e71a}, {"e71b", q.e71b}, {"e8", q.e8},
            {"e9", q.e9}, {"offdiag_mass", q.offdiag_mass}, {"g0", q.g0}, {"var_g1", q.var_g1},
            {"sigma2", q.sigma2}, {"sigma_ratio", q.sigma_ratio}, {"var_r_ratio", q.var_r_ratio}};
}

void quantities_rows(const DiagQuantities& q, Artifacts& art) {
    const std::pair<const char*, double> rows[] = {
        {"kn_over_n", q.kn_over_n},       {"diag_mass", q.diag_mass},         {"max_cell_mass", q.max_cell_mass},
        {"measure_kn_over_n", q.measure_kn_over_n}, {"n_min_measure", q.n_min_measure}, {"op_norm", q.op_norm},
        {"sup_over_kn", q.sup_over_kn},   {"e7", q.e7},                       {"e71a", q.e71a},
        {"e71b", q.e71b},                 {"e8", q.e8},                       {"e9", q.e9},
        {"sigma_ratio", q.sigma_ratio},   {"var_r_ratio", q.var_r_ratio}};
    for (const auto& [id, v] : rows) art.checks.push_back({id, q.n, v});
}

Artifacts run_diag(const DiagSpec& s, std::size_t workers) {
    Artifacts art;
    Json res;
    const DiagReport vdv = check_vdv_conditions(s.fam, s.n_grid, s.opt);
    const DiagReport extra = check_fvdv_extra(s.fam, s.n_grid, s.opt);
    Json rows = Json::array();
    for (const auto& q : vdv.rows) {
        rows.push_back(quantities_json(q));
        quantities_rows(q, art);
    }
    res["family"] = s.fam.describe();
    res["quantities"] = rows;
    res["trends"] = vdv.trends;
    res["extra_trends"] = extra.trends;
    const GridPlan plan = plan_grid(s.cov_grid, s.inc, s.n);
    const DiagRun run = run_diag_fclt(s.fam, s.n, s.replicates, plan.grid, RngStream(s.seed, stream_tag("diag")),
                                      workers, s.opt);
    res["run"] = quantities_json(run.q);
    const double dev = compare_cov(run.paths, plan.grid, plan.cov_idx,
                                   [](double a, double b) { return std::pow(std::min(a, b), 2.0); }, art);
    res["cov_max_abs_dev"] = dev;
    art.checks.push_back({"cov_max_abs_dev", s.n, dev});
    std::vector<double> at_one;
    for (const auto& row : run.paths) at_one.push_back(row.back());
    const KsResult ks = ks_test(at_one, normal_cdf);
    res["ks_w1"] = {{"statistic", ks.statistic}, {"p_value", ks.p_value}};
    if (s.inc.enabled) {
        const IncrementFit f = increment_moment_diag(run.paths, plan.grid, s.n, plan.inc_pairs, s.inc.beta);
        res["increments"] = increments_json(f);
        art.checks.push_back({"increment_exponent", s.n, f.exponent});
        if (s.inc_min) art.gates["increment_exponent_min"] = !f.degenerate && f.exponent >= *s.inc_min;
    }
    if (s.sigma_lo) art.gates["sigma_ratio_min"] = run.q.sigma_ratio >= *s.sigma_lo;
    if (s.sigma_hi) art.gates["sigma_ratio_max"] = run.q.sigma_ratio <= *s.sigma_hi;
    if (s.cov_max_abs) art.gates["cov_max_abs"] = dev <= *s.cov_max_abs;
    if (s.require_trends) art.gates["trends"] = vdv.all_pass && extra.all_pass;
    record_paths(run.paths, plan.grid, art);
    art.report["results"] = res;
    return art;
}

// --- product formula ---------------------------------------------------------

struct ProductSpec {
    std::size_t instances = 30, max_pq = 4, max_m = 6, max_atoms = 4;
    std::uint64_t seed = 0;
    double max_error = 1e-9, canonical_tol = 1e-9;
    bool bound_gate = true;
};

ProductSpec parse_product(const Reader& r) {
    ProductSpec s;
    r.known({"scenario", "seed", "instances", "max_pq", "max_m", "max_atoms", "gates"});
    s.seed = r.count("seed", std::nullopt);
    s.instances = r.count("instances", 30, 1, 10000);
    s.max_pq = r.count("max_pq", 4, 2, 4);
    s.max_m = r.count("max_m", 6, 2, 8);
    s.max_atoms = r.count("max_atoms", 4, 2, 4);
    if (s.max_m < s.max_pq) r.problems().add(r.where("max_m"), "must be at least max_pq");
    const Reader g = r.child("gates", false);
    g.known({"max_error", "canonical_tol", "variance_bound"});
    s.max_error = g.number("max_error", 1e-9, 0.0);
    s.canonical_tol = g.number("canonical_tol", 1e-9, 0.0);
    s.bound_gate = g.flag("variance_bound", true);
    return s;
}

// Random symmetric degenerate table of order p over `atoms` points.
Table random_degenerate(std::size_t atoms, std::size_t p, const std::vector<double>& w, RngStream& rng) {
    Table t(atoms, p);
    for (auto& v : t.values()) v = rng.normal();
    return exact_hoeffding(symmetrize(t), w).psi[p];
}

Artifacts run_product(const ProductSpec& s) {
    Artifacts art;
    Json inst = Json::array();
    double worst_err = 0.0, worst_canon = 0.0;
    bool bounds_ok = true;
    RngStream rng(s.seed, stream_tag("product"));
    for (std::size_t i = 0; i < s.instances; ++i) {
        const std::size_t pq = 2 + rng.below(s.max_pq - 1);
        const std::size_t p = 1 + rng.below(pq - 1), q = pq - p;
        const std::size_t m = pq + rng.below(s.max_m - pq + 1);
        const std::size_t n = pq + rng.below(m - pq + 1);
        const std::size_t atoms = 2 + rng.below(s.max_atoms - 1);
        std::vector<double> w(atoms);
        double tot = 0.0;
        for (auto& x : w) tot += (x = 0.2 + rng.uniform());
        for (auto& x : w) x /= tot;
        const Table psi = random_degenerate(atoms, p, w, rng), phi = random_degenerate(atoms, q, w, rng);
        const ProductFormula pf(psi, phi, w, n, m);
        const auto sets = pf.admissible_sets();
        double err = 0.0;
        std::vector<std::size_t> x(m + 1, 0);
        for_each_index_tuple(atoms, m, [&](std::span<const std::size_t> tup) {
            for (std::size_t j = 0; j < m; ++j) x[j + 1] = tup[j];
            double sum = 0.0;
            for (const auto& M : sets) sum += pf.component(M, x);
            err = std::max(err, std::abs(sum - pf.direct_product(x)));
        });
        double canon = 0.0, slack = HUGE_VAL;
        for (const auto& M : sets) {
            const Table tm = pf.component_table(M);
            const std::size_t k = M.size();
            std::size_t s_count = 0;
            for (std::size_t idx : M) s_count += idx > n ? 1 : 0;
            for (std::size_t j = 0; j < k; ++j) {
                std::vector<std::size_t> perm(k);
                for (std::size_t a = 0; a < k; ++a) perm[a] = a;
                std::swap(perm[j], perm[k - 1]);
                const Table marg = integrate_last(permute_args(tm, perm), w, 1);
                for (double v : marg.values()) canon = std::max(canon, std::abs(v));
            }
            const double sd = std::sqrt(std::max(0.0, table_inner(tm, tm, w)));
            const double bound = pf.bound(k, s_count);
            slack = std::min(slack, bound - sd);
            if (bound < sd * (1.0 - 1e-9) - 1e-12) bounds_ok = false;
        }
        worst_err = std::max(worst_err, err);
        worst_canon = std::max(worst_canon, canon);
        inst.push_back({{"p", p}, {"q", q}, {"n", n}, {"m", m}, {"atoms", atoms}, {"components", sets.size()},
                        {"max_error", err}, {"canonical_residual", canon}, {"min_bound_slack", slack}});
        art.checks.push_back({"instance_" + std::to_string(i) + ":max_error", n, err});
        art.checks.push_back({"instance_" + std::to_string(i) + ":canonical_residual", n, canon});
        art.checks.push_back({"instance_" + std::to_string(i) + ":min_bound_slack", n, slack});
    }
    art.report["results"] = {{"instances", inst}, {"max_error", worst_err}, {"max_canonical_residual", worst_canon},
                             {"bounds_dominate", bounds_ok}};
    art.gates["max_error"] = worst_err < s.max_error;
    art.gates["canonical"] = worst_canon < s.canonical_tol;
    if (s.bound_gate) art.gates["variance_bound"] = bounds_ok;
    return art;
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

void collect(const Problems& pr) {
    if (!pr.list.empty()) throw ConfigError(pr.list);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

bool Artifacts::pass() const {
    for (const auto& [k, v] : gates)
        if (!v) return false;
    return true;
}

const std::map<std::string, std::string>& module_versions() {
    static const std::map<std::string, std::string> v{
        {"sample_spaces", "1.0.0"},   {"ustat_core", "1.0.0"},      {"contractions", "1.0.0"},
        {"fclt_conditions", "1.0.0"}, {"limit_processes", "1.0.0"}, {"product_formula", "1.0.0"},
        {"rgg", "1.0.0"},             {"changepoint", "1.0.0"},     {"diag_dominant", "1.0.0"},
        {"harness_cli", "1.0.0"}};
    return v;
}

std::string scenario_for_subcommand(const std::string& sub) {
    static const std::map<std::string, std::string> m{{"check", "condition_check"}, {"verify-fclt", "fclt_verify"},
                                                      {"rgg", "rgg"},               {"changepoint", "changepoint"},
                                                      {"diag", "diag_dominant"},    {"product", "product_verify"}};
    const auto it = m.find(sub);
    if (it == m.end()) throw std::invalid_argument("unknown subcommand: " + sub);
    return it->second;
}

ExperimentConfig parse_config_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError({std::string("<root>: not valid JSON: ") + e.what()});
    }
    Problems pr;
    Reader r(j, "", pr);
    ExperimentConfig cfg;
    cfg.scenario = r.choice("scenario",
                            {"condition_check", "fclt_verify", "rgg", "changepoint", "diag_dominant", "product_verify"},
                            std::nullopt);
    collect(pr);
    cfg.body = j;
    cfg.hash = sha256_hex(j.dump());
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({path.string() + ": cannot open config file"});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void validate_config(const ExperimentConfig& cfg) {
    Problems pr;
    const Reader r(cfg.body, "", pr);
    if (cfg.scenario == "fclt_verify") parse_fclt(r);
    if (cfg.scenario == "condition_check") parse_check(r);
    if (cfg.scenario == "rgg") parse_rgg(r);
    if (cfg.scenario == "changepoint") parse_changepoint(r);
    if (cfg.scenario == "diag_dominant") parse_diag(r);
    if (cfg.scenario == "product_verify") parse_product(r);
    collect(pr);
}

Artifacts run_experiment(const ExperimentConfig& cfg, std::size_t workers) {
    if (workers == 0) workers = 1;
    Problems pr;
    const Reader r(cfg.body, "", pr);
    Artifacts art;
    try {
        if (cfg.scenario == "fclt_verify") {
            auto s = parse_fclt(r);
            collect(pr);
            art = run_fclt(s, workers);
        } else if (cfg.scenario == "condition_check") {
            auto s = parse_check(r);
            collect(pr);
            art = run_check(s);
        } else if (cfg.scenario == "rgg") {
            auto s = parse_rgg(r);
            collect(pr);
            art = run_rgg(s, workers);
        } else if (cfg.scenario == "changepoint") {
            auto s = parse_changepoint(r);
            collect(pr);
            art = s.statistic == "edge" ? run_changepoint_edge(s, workers) : run_changepoint_ustat(s, workers);
        } else if (cfg.scenario == "diag_dominant") {
            auto s = parse_diag(r);
            collect(pr);
            art = run_diag(s, workers);
        } else {
            auto s = parse_product(r);
            collect(pr);
            art = run_product(s);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Refusal& e) {
        throw Refusal("scenario " + cfg.scenario + ": " + e.what());
    }
    Json results = art.report.contains("results") ? art.report["results"] : Json::object();
    art.report = Json::object();
    art.report["scenario"] = cfg.scenario;
    art.report["config_hash"] = cfg.hash;
    art.report["module_versions"] = module_versions();
    art.report["config"] = cfg.body;
    art.report["gates"] = art.gates;
    art.report["pass"] = art.pass();
    art.report["results"] = results;
    return art;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void write_artifacts(const Artifacts& a, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto open = [&](const char* name) {
        std::ofstream f(out_dir / name, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
        return f;
    };
    {
        auto f = open("report.json");
        f << a.report.dump(2) << '\n';
    }
    {
        auto f = open("cov.csv");
        f << "s,t,empirical,target,se\n";
        for (const auto& r : a.cov)
            f << format_double(r.s) << ',' << format_double(r.t) << ',' << format_double(r.empirical) << ','
              << format_double(r.target) << ',' << format_double(r.se) << '\n';
    }
    {
        auto f = open("checks.csv");
        f << "check_id,n,value\n";
        for (const auto& r : a.checks) f << r.id << ',' << r.n << ',' << format_double(r.value) << '\n';
    }
    {
        auto f = open("paths.csv");
        f << "replicate,t,value\n";
        for (const auto& r : a.paths) f << r.replicate << ',' << format_double(r.t) << ',' << format_double(r.value) << '\n';
    }
}

}  // namespace ustat
