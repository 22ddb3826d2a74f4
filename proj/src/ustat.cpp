#include "ustat/ustat.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

#include "ustat/errors.hpp"

namespace ustat {

double binom(double n, double k) {
    if (k < 0 || n < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (int i = 1; i <= static_cast<int>(k); ++i) r = r * (n - k + i) / i;
    return r < 1e15 ? std::round(r) : r;
}

std::size_t prefix_length(std::size_t n, double t) {
    const double v = std::floor(static_cast<double>(n) * t + 1e-9);
    if (v <= 0.0) return 0;
    return std::min<std::size_t>(n, static_cast<std::size_t>(v));
}

namespace {

// Calls visit(args) for every increasing p-subset of [0, len).
template <class F>
void for_each_subset(const PointSet& sample, std::size_t len, std::size_t p, std::vector<PointView>& args, F&& visit) {
    std::vector<std::size_t> idx(p);
    for (std::size_t i = 0; i < p; ++i) idx[i] = i;
    if (p == 0) {
        visit();
        return;
    }
    if (len < p) return;
    for (;;) {
        for (std::size_t i = 0; i < p; ++i) args[i] = sample[idx[i]];
        visit();
        std::size_t pos = p;
        while (pos > 0) {
            --pos;
            if (idx[pos] < len - p + pos) break;
            if (pos == 0) return;
        }
        ++idx[pos];
        for (std::size_t i = pos + 1; i < p; ++i) idx[i] = idx[i - 1] + 1;
    }
}

}  // namespace

double eval_ustat(const Kernel& k, const PointSet& sample, std::size_t len, std::size_t n_param, bool* short_prefix) {
    const std::size_t p = k.order;
    if (len < p) {
        if (short_prefix) *short_prefix = true;
        return 0.0;
    }
    if (short_prefix) *short_prefix = false;
    std::vector<PointView> args(p);
    double total = 0.0;
    for_each_subset(sample, len, p, args, [&] { total += k(args, n_param); });
    return total;
}

std::vector<double> uniform_grid(std::size_t points) {
    std::vector<double> g(points);
    for (std::size_t j = 0; j < points; ++j) g[j] = static_cast<double>(j + 1) / static_cast<double>(points);
    return g;
}

std::vector<double> default_grid(std::size_t n, std::size_t max_points) {
    std::vector<double> g;
    if (n == 0) return g;
    const std::size_t stride = (n + max_points - 1) / max_points;
    for (std::size_t j = stride; j < n; j += stride) g.push_back(static_cast<double>(j) / static_cast<double>(n));
    g.push_back(1.0);
    return g;
}

SequentialPath sequential_upath(const Kernel& k, const PointSet& sample, const std::vector<double>& grid,
                                std::size_t n_param) {
    const std::size_t p = k.order;
    const std::size_t n = sample.size();
    if (p == 0) throw Refusal("sequential_upath: kernel order must be >= 1");
    if (p > 4) throw Refusal("sequential_upath: order > 4 exceeds the cost guard");
    if (p > n) throw Refusal("sequential_upath: kernel order exceeds sample size");
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (grid[j] < 0.0 || grid[j] > 1.0) throw Refusal("sequential_upath: grid times must lie in [0,1]");
        if (j > 0 && grid[j] <= grid[j - 1]) throw Refusal("sequential_upath: grid must be increasing");
    }
    SequentialPath path{n, grid, std::vector<double>(grid.size(), 0.0)};
    std::vector<PointView> args(p);
    double running = 0.0;
    std::size_t next = 0;
    auto record = [&](std::size_t len) {
        while (next < grid.size() && prefix_length(n, grid[next]) <= len) path.values[next++] = running;
    };
    record(0);
    for (std::size_t m = 0; m < n; ++m) {
        // New point m joins every (p-1)-subset of the previous prefix.
        args[p - 1] = sample[m];
        if (p == 1) {
            running += k(args, n_param);
        } else if (p == 2) {
            for (std::size_t i = 0; i < m; ++i) {
                args[0] = sample[i];
                running += k(args, n_param);
            }
        } else if (m >= p - 1) {
            std::vector<PointView> sub(p - 1);
            for_each_subset(sample, m, p - 1, sub, [&] {
                std::copy(sub.begin(), sub.end(), args.begin());
                running += k(args, n_param);
            });
        }
        record(m + 1);
    }
    return path;
}

ExactHoeffding exact_hoeffding(const Table& psi, const std::vector<double>& w) {
    const std::size_t p = psi.order();
    const std::size_t a = psi.atoms();
    ExactHoeffding h;
    h.g.resize(p + 1);
    h.psi.resize(p + 1);
    h.g[p] = psi;
    for (std::size_t l = p; l-- > 0;) h.g[l] = integrate_last(h.g[l + 1], w, 1);
    for (std::size_t k = 0; k <= p; ++k) {
        Table out(a, k);
        std::vector<std::size_t> sub;
        std::size_t flat = 0;
        for_each_index_tuple(a, k, [&](std::span<const std::size_t> idx) {
            double s = 0.0;
            for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
                sub.clear();
                for (std::size_t i = 0; i < k; ++i)
                    if (mask & (1u << i)) sub.push_back(i);
                const double sign = ((k - sub.size()) % 2 == 0) ? 1.0 : -1.0;
                s += sign * table_at_subset(h.g[sub.size()], idx, sub);
            }
            out[flat++] = s;
        });
        h.psi[k] = std::move(out);
    }
    return h;
}

namespace {

std::uint64_t point_key(std::span<const PointView> y) {
    std::uint64_t h = 0x5EEDu;
    for (const auto& p : y)
        for (double c : p) h = hash_combine(h, std::bit_cast<std::uint64_t>(c));
    return h;
}

void require_mc_budget(const EvalMode& mode) {
    if (!mode.is_exact() && mode.M < 100) throw Refusal("Monte Carlo mode needs M >= 100");
}

}  // namespace

McValue mc_g_value(const Kernel& k, const Distribution& dist, std::span<const PointView> y, std::size_t M,
                   RngStream& rng, std::size_t n_param) {
    const std::size_t p = k.order;
    const std::size_t l = y.size();
    std::vector<PointView> args(p);
    std::copy(y.begin(), y.end(), args.begin());
    if (l == p) return {k(args, n_param), 0.0};
    PointSet draw(dist.dim());
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        dist.sample_into(draw, p - l, rng);
        for (std::size_t j = l; j < p; ++j) args[j] = draw[j - l];
        const double v = k(args, n_param);
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / static_cast<double>(M);
    const double var = std::max(0.0, (sum2 - M * mean * mean) / static_cast<double>(M - 1));
    return {mean, std::sqrt(var / static_cast<double>(M))};
}

Kernel hoeffding_g(const Kernel& k, const Distribution& dist, std::size_t level, const EvalMode& mode,
                   std::size_t n_param) {
    const std::size_t p = k.order;
    if (level > p) throw Refusal("hoeffding_g: level exceeds kernel order");
    if (level == p) return k;
    const std::string name = "g" + std::to_string(level) + "[" + k.name + "]";
    if (mode.is_exact()) {
        const Table t = Table::tabulate(k, dist, n_param);
        return integrate_last(t, dist.weights(), p - level).as_kernel(dist, name);
    }
    require_mc_budget(mode);
    const std::size_t M = mode.M;
    const std::uint64_t seed = mode.seed;
    return {name, level, k.size_dependent, [k, dist, M, seed, level](std::span<const PointView> y, std::size_t n) {
                RngStream rng(seed, hash_combine(point_key(y), hash_combine(level, n)));
                return mc_g_value(k, dist, y, M, rng, n).mean;
            }};
}

Kernel hoeffding_psi(const Kernel& k, const Distribution& dist, std::size_t level, const EvalMode& mode,
                     std::size_t n_param) {
    const std::size_t p = k.order;
    if (level > p) throw Refusal("hoeffding_psi: level exceeds kernel order");
    const std::string name = "psi" + std::to_string(level) + "[" + k.name + "]";
    if (mode.is_exact()) {
        const auto h = exact_hoeffding(Table::tabulate(k, dist, n_param), dist.weights());
        return h.psi[level].as_kernel(dist, name);
    }
    require_mc_budget(mode);
    std::vector<Kernel> g;
    for (std::size_t l = 0; l <= level; ++l) g.push_back(hoeffding_g(k, dist, l, mode, n_param));
    return {name, level, k.size_dependent, [g, level](std::span<const PointView> x, std::size_t n) {
                double s = 0.0;
                std::vector<PointView> sub;
                for (std::uint32_t mask = 0; mask < (1u << level); ++mask) {
                    sub.clear();
                    for (std::size_t i = 0; i < level; ++i)
                        if (mask & (1u << i)) sub.push_back(x[i]);
                    const double sign = ((level - sub.size()) % 2 == 0) ? 1.0 : -1.0;
                    s += sign * g[sub.size()](sub, n);
                }
                return s;
            }};
}

Sigma2 sigma2_from_components(std::size_t p, std::size_t n, double g0, const std::vector<double>& psi_norm2,
                              const std::vector<double>& var_g) {
    Sigma2 out;
    out.g0 = g0;
    out.psi_norm2 = psi_norm2;
    out.var_g = var_g;
    const double nn = static_cast<double>(n), pp = static_cast<double>(p);
    for (std::size_t k = 1; k <= p; ++k) {
        const double kk = static_cast<double>(k);
        const double c = binom(nn - kk, pp - kk);
        out.via_psi += c * c * binom(nn, kk) * psi_norm2[k];
        out.via_g += binom(pp, kk) * binom(nn - pp, pp - kk) * var_g[k];
    }
    out.via_g *= binom(nn, pp);
    return out;
}

Sigma2 variance_sigma2(const Kernel& k, const Distribution& dist, std::size_t n, const EvalMode& mode) {
    const std::size_t p = k.order;
    if (n < p) throw Refusal("variance_sigma2: n < p");
    std::vector<double> psi_norm2(p + 1, 0.0), var_g(p + 1, 0.0);
    double g0 = 0.0;
    bool negative = false;
    if (mode.is_exact()) {
        const auto& w = dist.weights();
        const auto h = exact_hoeffding(Table::tabulate(k, dist, n), w);
        g0 = h.g[0][0];
        for (std::size_t j = 0; j <= p; ++j) {
            psi_norm2[j] = table_inner(h.psi[j], h.psi[j], w);
            const double mean = table_expect(h.g[j], w);
            var_g[j] = table_inner(h.g[j], h.g[j], w) - mean * mean;
        }
        var_g[0] = 0.0;
    } else {
        require_mc_budget(mode);
        // Unbiased E[g_j^2]: product of two independent inner means per outer draw.
        const std::size_t M = mode.M;
        std::vector<double> eg2(p + 1, 0.0);
        RngStream rng(mode.seed, hash_combine(0xC0FFEEu, n));
        PointSet outer(dist.dim());
        {
            RngStream r1 = rng.split(1), r2 = rng.split(2);
            const std::size_t big = 20 * M;
            std::vector<PointView> none;
            const double a = mc_g_value(k, dist, none, big, r1, n).mean;
            const double b = mc_g_value(k, dist, none, big, r2, n).mean;
            g0 = 0.5 * (a + b);
            eg2[0] = a * b;
        }
        for (std::size_t j = 1; j <= p; ++j) {
            RngStream r = rng.split(10 + j);
            double acc = 0.0;
            std::vector<PointView> y(j);
            for (std::size_t i = 0; i < M; ++i) {
                dist.sample_into(outer, j, r);
                for (std::size_t c = 0; c < j; ++c) y[c] = outer[c];
                if (j == p) {
                    const double v = k(y, n);
                    acc += v * v;
                } else {
                    RngStream ra = r.split(2 * i), rb = r.split(2 * i + 1);
                    const double a = mc_g_value(k, dist, y, M / 2, ra, n).mean;
                    const double b = mc_g_value(k, dist, y, M / 2, rb, n).mean;
                    acc += a * b;
                }
            }
            eg2[j] = acc / static_cast<double>(M);
        }
        for (std::size_t j = 1; j <= p; ++j) {
            var_g[j] = eg2[j] - eg2[0];
            double s = 0.0;
            for (std::size_t i = 0; i <= j; ++i)
                s += (((j - i) % 2 == 0) ? 1.0 : -1.0) * binom(static_cast<double>(j), static_cast<double>(i)) * eg2[i];
            psi_norm2[j] = s;
            if (var_g[j] < 0.0 || psi_norm2[j] < 0.0) {
                negative = true;
                var_g[j] = std::max(0.0, var_g[j]);
                psi_norm2[j] = std::max(0.0, psi_norm2[j]);
            }
        }
        psi_norm2[0] = eg2[0];
    }
    auto out = sigma2_from_components(p, n, g0, psi_norm2, var_g);
    out.negative_flag = negative;
    return out;
}

SequentialPath normalize_path(const SequentialPath& path, std::size_t p, double g0, double sigma2) {
    if (!(sigma2 > 0.0)) throw Refusal("normalize_path: vanishing variance");
    const double sigma = std::sqrt(sigma2);
    SequentialPath out = path;
    for (std::size_t j = 0; j < path.grid.size(); ++j) {
        const double len = static_cast<double>(prefix_length(path.n, path.grid[j]));
        out.values[j] = (path.values[j] - binom(len, static_cast<double>(p)) * g0) / sigma;
    }
    return out;
}

SequentialPath normalize_path(const SequentialPath& path, const Kernel& k, const Distribution& dist,
                              const EvalMode& mode) {
    const auto s = variance_sigma2(k, dist, path.n, mode);
    return normalize_path(path, k.order, s.g0, s.via_psi);
}

double check_degeneracy(const Kernel& k, const Distribution& dist, const EvalMode& mode, std::size_t n_param,
                        std::size_t probes) {
    const std::size_t p = k.order;
    if (p == 0) return std::abs(k({}, n_param));
    if (mode.is_exact()) {
        const Table g = integrate_last(Table::tabulate(k, dist, n_param), dist.weights(), 1);
        double worst = 0.0;
        for (double v : g.values()) worst = std::max(worst, std::abs(v));
        return worst;
    }
    require_mc_budget(mode);
    RngStream rng(mode.seed, 0xDE6E4ull);
    double worst = 0.0;
    std::vector<PointView> y(p - 1);
    PointSet probe(dist.dim());
    for (std::size_t i = 0; i < probes; ++i) {
        dist.sample_into(probe, p - 1, rng);
        for (std::size_t c = 0; c + 1 < p; ++c) y[c] = probe[c];
        RngStream inner = rng.split(i);
        worst = std::max(worst, std::abs(mc_g_value(k, dist, y, mode.M, inner, n_param).mean));
    }
    return worst;
}

Kernel center_kernel(const Kernel& k, const Distribution& dist, const EvalMode& mode) {
    struct Cache {
        std::mutex mu;
        std::map<std::size_t, double> g0;
    };
    auto cache = std::make_shared<Cache>();
    auto mean_at = [k, dist, mode, cache](std::size_t n) {
        {
            std::lock_guard<std::mutex> lock(cache->mu);
            auto it = cache->g0.find(n);
            if (it != cache->g0.end()) return it->second;
        }
        double g0;
        if (mode.is_exact()) {
            g0 = table_expect(Table::tabulate(k, dist, n), dist.weights());
        } else {
            RngStream rng(mode.seed, hash_combine(0xCE17E4ull, n));
            g0 = mc_g_value(k, dist, {}, 20 * mode.M, rng, n).mean;
        }
        std::lock_guard<std::mutex> lock(cache->mu);
        cache->g0[n] = g0;
        return g0;
    };
    if (!k.size_dependent) {
        const double g0 = mean_at(2);
        Kernel out = kernels::shifted(k, [g0](std::size_t) { return g0; });
        out.name = k.name + "-centered";
        return out;
    }
    Kernel out = kernels::shifted(k, mean_at);
    out.name = k.name + "-centered";
    return out;
}

}  // namespace ustat
