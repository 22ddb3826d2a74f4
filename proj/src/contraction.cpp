#include "ustat/contraction.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "ustat/errors.hpp"

namespace ustat {

void ContractionIndex::validate() const {
    if (l > r || r > std::min(p, q))
        throw Refusal("contraction index needs 0 <= l <= r <= min(p,q); got r=" + std::to_string(r) +
                      " l=" + std::to_string(l) + " p=" + std::to_string(p) + " q=" + std::to_string(q));
}

namespace {

struct Shape {
    std::size_t nx, ny, nt, ns;
};

Shape shape_of(const ContractionIndex& idx, std::size_t a) {
    return {ipow(a, idx.l), ipow(a, idx.r - idx.l), ipow(a, idx.p - idx.r), ipow(a, idx.q - idx.r)};
}

void check_tables(const Table& psi, const Table& phi, const ContractionIndex& idx) {
    idx.validate();
    if (psi.order() != idx.p || phi.order() != idx.q) throw Refusal("contraction: table orders do not match index");
    if (psi.atoms() != phi.atoms()) throw Refusal("contraction: kernels live on different spaces");
}

// Calls emit(flat_out, value, weight) for every output tuple.
template <class Emit>
void stream_contraction(const Table& psi, const Table& phi, const ContractionIndex& idx, const std::vector<double>& w,
                        Emit&& emit) {
    const std::size_t a = psi.atoms();
    const Shape sh = shape_of(idx, a);
    const auto wx = product_weights(w, idx.l);
    const auto wy = product_weights(w, idx.r - idx.l);
    const auto wt = product_weights(w, idx.p - idx.r);
    const auto ws = product_weights(w, idx.q - idx.r);
    std::vector<double> ax(sh.nx);
    for (std::size_t y = 0; y < sh.ny; ++y) {
        for (std::size_t t = 0; t < sh.nt; ++t) {
            for (std::size_t x = 0; x < sh.nx; ++x) ax[x] = wx[x] * psi[(x * sh.ny + y) * sh.nt + t];
            const std::size_t out_base = (y * sh.nt + t) * sh.ns;
            const double wyt = wy[y] * wt[t];
            for (std::size_t s = 0; s < sh.ns; ++s) {
                double v = 0.0;
                for (std::size_t x = 0; x < sh.nx; ++x) v += ax[x] * phi[(x * sh.ny + y) * sh.ns + s];
                emit(out_base + s, v, wyt * ws[s]);
            }
        }
    }
}

std::uint64_t args_key(std::span<const PointView> y) {
    std::uint64_t h = 0xC047ull;
    for (const auto& p : y)
        for (double c : p) h = hash_combine(h, std::bit_cast<std::uint64_t>(c));
    return h;
}

// Monte Carlo estimate of the contraction at fixed (y, t, s) using `draws` inner samples.
double mc_contraction_value(const Kernel& psi, const Kernel& phi, const ContractionIndex& idx,
                            const Distribution& dist, std::span<const PointView> out_args, std::size_t draws,
                            RngStream& rng, std::size_t n) {
    const std::size_t ny = idx.r - idx.l, nt = idx.p - idx.r;
    std::vector<PointView> a(idx.p), b(idx.q);
    for (std::size_t i = 0; i < ny; ++i) a[idx.l + i] = b[idx.l + i] = out_args[i];
    for (std::size_t i = 0; i < nt; ++i) a[idx.r + i] = out_args[ny + i];
    for (std::size_t i = 0; i < idx.q - idx.r; ++i) b[idx.r + i] = out_args[ny + nt + i];
    if (idx.l == 0) return psi(a, n) * phi(b, n);
    PointSet xs(dist.dim());
    double sum = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
        dist.sample_into(xs, idx.l, rng);
        for (std::size_t i = 0; i < idx.l; ++i) a[i] = b[i] = xs[i];
        sum += psi(a, n) * phi(b, n);
    }
    return sum / static_cast<double>(draws);
}

}  // namespace

Table contract_exact(const Table& psi, const Table& phi, const ContractionIndex& idx, const std::vector<double>& w) {
    check_tables(psi, phi, idx);
    Table out(psi.atoms(), idx.out_order());
    stream_contraction(psi, phi, idx, w, [&](std::size_t flat, double v, double) { out[flat] = v; });
    return out;
}

double contraction_norm_exact(const Table& psi, const Table& phi, const ContractionIndex& idx,
                              const std::vector<double>& w) {
    check_tables(psi, phi, idx);
    const double required = std::pow(static_cast<double>(psi.atoms()), static_cast<double>(idx.p + idx.q - idx.r));
    if (required > 1e10) throw BudgetExceeded("contraction_norm_exact", required, 1e10);
    double s = 0.0;
    stream_contraction(psi, phi, idx, w, [&](std::size_t, double v, double wt) { s += wt * v * v; });
    return std::sqrt(s);
}

Kernel contract(const Kernel& psi, const Kernel& phi, const ContractionIndex& idx, const Distribution& dist,
                const EvalMode& mode, std::size_t n_param) {
    idx.validate();
    if (psi.order != idx.p || phi.order != idx.q) throw Refusal("contract: kernel orders do not match index");
    const std::string name = "(" + psi.name + ")*" + std::to_string(idx.r) + "^" + std::to_string(idx.l) + "(" +
                             phi.name + ")";
    if (mode.is_exact()) {
        const Table t = contract_exact(Table::tabulate(psi, dist, n_param), Table::tabulate(phi, dist, n_param), idx,
                                       dist.weights());
        return t.as_kernel(dist, name);
    }
    if (mode.M < 100) throw Refusal("Monte Carlo mode needs M >= 100");
    const std::size_t M = mode.M;
    const std::uint64_t seed = mode.seed;
    return {name, idx.out_order(), psi.size_dependent || phi.size_dependent,
            [psi, phi, idx, dist, M, seed](std::span<const PointView> args, std::size_t n) {
                RngStream rng(seed, hash_combine(args_key(args), n));
                return mc_contraction_value(psi, phi, idx, dist, args, M, rng, n);
            }};
}

NormEstimate contraction_norm(const Kernel& psi, const Kernel& phi, const ContractionIndex& idx,
                              const Distribution& dist, const EvalMode& mode, std::size_t n_param,
                              const McBudget& budget) {
    idx.validate();
    if (psi.order != idx.p || phi.order != idx.q) throw Refusal("contraction_norm: kernel orders do not match index");
    if (mode.is_exact()) {
        return {contraction_norm_exact(Table::tabulate(psi, dist, n_param), Table::tabulate(phi, dist, n_param), idx,
                                       dist.weights()),
                0.0, false};
    }
    const std::size_t batches = std::max<std::size_t>(2, budget.batches);
    const std::size_t per_batch = std::max<std::size_t>(1, budget.outer / batches);
    const std::size_t half = std::max<std::size_t>(1, budget.inner / 2);
    const std::size_t o = idx.out_order();
    RngStream root(mode.seed, hash_combine(0x404Dull, hash_combine(idx.r * 16 + idx.l, n_param)));
    std::vector<double> batch_means(batches, 0.0);
    std::vector<PointView> args(o);
    PointSet outer(dist.dim());
    for (std::size_t b = 0; b < batches; ++b) {
        RngStream rng = root.split(b);
        double acc = 0.0;
        for (std::size_t i = 0; i < per_batch; ++i) {
            dist.sample_into(outer, o, rng);
            for (std::size_t c = 0; c < o; ++c) args[c] = outer[c];
            if (idx.l == 0) {
                const double v = mc_contraction_value(psi, phi, idx, dist, args, 1, rng, n_param);
                acc += v * v;
            } else {
                // Two independent inner means make the square unbiased.
                RngStream ra = rng.split(2 * i + 1), rb = rng.split(2 * i + 2);
                acc += mc_contraction_value(psi, phi, idx, dist, args, half, ra, n_param) *
                       mc_contraction_value(psi, phi, idx, dist, args, half, rb, n_param);
            }
        }
        batch_means[b] = acc / static_cast<double>(per_batch);
    }
    const double mean = std::accumulate(batch_means.begin(), batch_means.end(), 0.0) / batches;
    double var = 0.0;
    for (double m : batch_means) var += (m - mean) * (m - mean);
    var /= static_cast<double>(batches - 1);
    const double se2 = std::sqrt(var / static_cast<double>(batches));
    NormEstimate est;
    est.clamped = mean < 0.0;
    est.value = std::sqrt(std::max(0.0, mean));
    est.se = est.value > 0.0 ? se2 / (2.0 * est.value) : std::sqrt(se2);
    return est;
}

Kernel symmetrize(const Kernel& f) {
    const std::size_t p = f.order;
    std::vector<std::vector<std::size_t>> perms;
    std::vector<std::size_t> perm(p);
    std::iota(perm.begin(), perm.end(), 0);
    do perms.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));
    Kernel out = f;
    out.name = "sym(" + f.name + ")";
    auto inner = f.fn;
    out.fn = [inner, perms](std::span<const PointView> x, std::size_t n) {
        std::vector<PointView> y(x.size());
        double s = 0.0;
        for (const auto& pm : perms) {
            for (std::size_t i = 0; i < pm.size(); ++i) y[i] = x[pm[i]];
            s += inner(y, n);
        }
        return s / static_cast<double>(perms.size());
    };
    return out;
}

Table symmetrize(const Table& f) {
    const std::size_t p = f.order();
    std::vector<std::size_t> perm(p);
    std::iota(perm.begin(), perm.end(), 0);
    Table out(f.atoms(), p);
    double count = 0.0;
    do {
        const Table g = permute_args(f, perm);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i];
        count += 1.0;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (auto& v : out.values()) v /= count;
    return out;
}

}  // namespace ustat
