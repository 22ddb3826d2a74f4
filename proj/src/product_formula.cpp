#include "ustat/product_formula.hpp"

#include <algorithm>
#include <cmath>

#include "ustat/contraction.hpp"
#include "ustat/errors.hpp"
#include "ustat/ustat.hpp"

namespace ustat {

namespace {

constexpr std::size_t kMaxPQ = 4;
constexpr std::size_t kMaxM = 8;
constexpr std::size_t kMaxAtoms = 4;

double factorial(std::size_t k) {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return f;
}

// Calls visit(subset) for each size-k subset of `pool`, in lexicographic order.
template <class Visit>
void for_each_subset(const IndexSet& pool, std::size_t k, Visit&& visit) {
    if (k > pool.size()) return;
    std::vector<std::size_t> pos(k);
    for (std::size_t i = 0; i < k; ++i) pos[i] = i;
    IndexSet sub(k);
    while (true) {
        for (std::size_t i = 0; i < k; ++i) sub[i] = pool[pos[i]];
        visit(static_cast<const IndexSet&>(sub));
        std::size_t i = k;
        while (i > 0 && pos[i - 1] == pool.size() - k + i - 1) --i;
        if (i == 0) return;
        ++pos[i - 1];
        for (std::size_t j = i; j < k; ++j) pos[j] = pos[j - 1] + 1;
    }
}

IndexSet set_minus(const IndexSet& a, const IndexSet& b) {
    IndexSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

void check_degenerate_table(const Table& t, const std::vector<double>& w, const char* which) {
    if (t.order() == 0) throw Refusal(std::string("product formula: ") + which + " must have order >= 1");
    const Table g = integrate_last(t, w, 1);
    double res = 0.0;
    for (double v : g.values()) res = std::max(res, std::abs(v));
    if (res > 1e-9) throw Refusal(std::string("product formula: ") + which + " is not degenerate (residual " +
                                  std::to_string(res) + ")");
    const Table sym = symmetrize(t);
    double d = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) d = std::max(d, std::abs(sym[i] - t[i]));
    if (d > 1e-12) throw Refusal(std::string("product formula: ") + which + " is not symmetric");
}

}  // namespace

double multinomial(std::size_t total, std::size_t a, std::size_t b, std::size_t c) {
    if (a + b + c != total) return 0.0;
    return std::round(factorial(total) / (factorial(a) * factorial(b) * factorial(c)));
}

TripleFamily pi_triples(std::size_t r, std::size_t n, std::size_t m, const IndexSet& L, std::size_t p,
                        std::size_t q) {
    if (n > m) throw Refusal("pi_triples: need n <= m");
    if (r > std::min(p, q)) throw Refusal("pi_triples: need r <= min(p,q)");
    if (L.size() + 2 * r < p + q) throw Refusal("pi_triples: need |L| >= p+q-2r");
    if (!std::is_sorted(L.begin(), L.end()) || std::adjacent_find(L.begin(), L.end()) != L.end())
        throw Refusal("pi_triples: L must be a strictly increasing index list");
    if (!L.empty() && (L.front() < 1 || L.back() > m)) throw Refusal("pi_triples: L must lie in [m]");

    TripleFamily fam{r, n, m, p, q, L, {}};
    const std::size_t a = 2 * r + L.size() - p - q;
    const std::size_t b = p - r;
    const std::size_t c = q - r;
    IndexSet low;
    std::size_t s = 0;
    for (std::size_t i : L) (i <= n ? low.push_back(i) : void(++s));
    // Indices above n can only go to C.
    if (s <= c) {
        IndexSet high = set_minus(L, low);
        for_each_subset(low, a, [&](const IndexSet& A) {
            const IndexSet rest = set_minus(low, A);
            for_each_subset(rest, b, [&](const IndexSet& B) {
                IndexSet C = set_minus(rest, B);
                C.insert(C.end(), high.begin(), high.end());
                std::sort(C.begin(), C.end());
                fam.triples.push_back({A, B, std::move(C)});
            });
        });
    }
    const double expect = s <= c ? multinomial(L.size() - s, a, b, c - s) : 0.0;
    if (static_cast<double>(fam.triples.size()) != expect)
        throw Refusal("pi_triples: enumeration size differs from the multinomial count");
    return fam;
}

Table hoeffding_project_nonsym(const Table& f, const std::vector<double>& w, const std::vector<std::size_t>& J) {
    const std::size_t k = f.order();
    for (std::size_t i = 0; i < J.size(); ++i)
        if (J[i] >= k || (i > 0 && J[i] <= J[i - 1])) throw Refusal("hoeffding_project_nonsym: J must be increasing positions < k");
    const std::size_t a = f.atoms();
    const std::size_t j = J.size();
    Table out(a, j);
    // Sum over K subset of J, encoded as a bitmask over positions of J.
    for (std::size_t mask = 0; mask < (std::size_t{1} << j); ++mask) {
        std::vector<std::size_t> keep, drop;
        std::vector<std::size_t> kpos;  // positions within J that are kept
        for (std::size_t i = 0; i < j; ++i)
            if (mask >> i & 1) {
                keep.push_back(J[i]);
                kpos.push_back(i);
            }
        for (std::size_t i = 0; i < k; ++i)
            if (std::find(keep.begin(), keep.end(), i) == keep.end()) drop.push_back(i);
        // Move kept coordinates to the front, then integrate the rest.
        std::vector<std::size_t> perm(k);
        for (std::size_t i = 0; i < keep.size(); ++i) perm[keep[i]] = i;
        for (std::size_t i = 0; i < drop.size(); ++i) perm[drop[i]] = keep.size() + i;
        const Table marg = integrate_last(permute_args(f, perm), w, drop.size());
        const double sign = ((j - keep.size()) % 2) ? -1.0 : 1.0;
        std::size_t flat = 0;
        for_each_index_tuple(a, j, [&](std::span<const std::size_t> idx) {
            out[flat++] += sign * table_at_subset(marg, idx, kpos);
        });
    }
    return out;
}

ProductFormula::ProductFormula(Table psi, Table phi, std::vector<double> w, std::size_t n, std::size_t m)
    : psi_(std::move(psi)), phi_(std::move(phi)), w_(std::move(w)), n_(n), m_(m) {
    const std::size_t p = psi_.order(), q = phi_.order();
    if (p + q > kMaxPQ) throw BudgetExceeded("product formula p+q", static_cast<double>(p + q), kMaxPQ);
    if (m_ > kMaxM) throw BudgetExceeded("product formula m", static_cast<double>(m_), kMaxM);
    if (psi_.atoms() > kMaxAtoms) throw BudgetExceeded("product formula atoms", static_cast<double>(psi_.atoms()), kMaxAtoms);
    if (n_ > m_) throw Refusal("product formula: need n <= m");
    if (n_ < p + q) throw Refusal("product formula: need n >= p+q");
    check_degenerate_table(psi_, w_, "psi");
    check_degenerate_table(phi_, w_, "phi");
}

const Table& ProductFormula::projected(std::size_t r, std::size_t k) const {
    const auto key = std::make_pair(r, k);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const std::size_t p = psi_.order(), q = phi_.order();
    const ContractionIndex idx{r, p + q - r - k, p, q};
    const Table c = contract_exact(psi_, phi_, idx, w_);
    std::vector<std::size_t> all(k);
    for (std::size_t i = 0; i < k; ++i) all[i] = i;
    return cache_.emplace(key, hoeffding_project_nonsym(c, w_, all)).first->second;
}

double ProductFormula::component(const IndexSet& M, const std::vector<std::size_t>& x) const {
    const std::size_t p = psi_.order(), q = phi_.order();
    const std::size_t k = M.size();
    std::size_t s = 0;
    for (std::size_t i : M) s += i > n_;
    if (k > p + q || s > q || k + q < p || k + p < q) return 0.0;
    const std::size_t r_lo = (p + q - k + 1) / 2;
    const std::size_t r_hi = std::min({p, q - s, p + q - k});
    double total = 0.0;
    std::vector<std::size_t> args(k);
    for (std::size_t r = r_lo; r <= r_hi && r_hi >= r_lo; ++r) {
        const double coef = binom(static_cast<double>(n_ - k + s), static_cast<double>(p + q - r - k));
        if (coef == 0.0) continue;
        const Table& f = projected(r, k);
        const TripleFamily fam = pi_triples(r, n_, m_, M, p, q);
        double sum = 0.0;
        for (const auto& t : fam.triples) {
            std::size_t pos = 0;
            for (std::size_t i : t.A) args[pos++] = x[i];
            for (std::size_t i : t.B) args[pos++] = x[i];
            for (std::size_t i : t.C) args[pos++] = x[i];
            sum += f.at(args);
        }
        total += coef * sum;
    }
    return total;
}

Table ProductFormula::component_table(const IndexSet& M) const {
    Table out(psi_.atoms(), M.size());
    std::vector<std::size_t> x(m_ + 1, 0);
    std::size_t flat = 0;
    for_each_index_tuple(psi_.atoms(), M.size(), [&](std::span<const std::size_t> idx) {
        for (std::size_t i = 0; i < M.size(); ++i) x[M[i]] = idx[i];
        out[flat++] = component(M, x);
    });
    return out;
}

std::vector<IndexSet> ProductFormula::admissible_sets() const {
    const std::size_t p = psi_.order(), q = phi_.order();
    IndexSet all(m_);
    for (std::size_t i = 0; i < m_; ++i) all[i] = i + 1;
    std::vector<IndexSet> out;
    for (std::size_t k = 0; k <= std::min(p + q, m_); ++k)
        for_each_subset(all, k, [&](const IndexSet& M) {
            std::size_t s = 0;
            for (std::size_t i : M) s += i > n_;
            if (s <= q) out.push_back(M);
        });
    return out;
}

double ProductFormula::direct_product(const std::vector<std::size_t>& x) const {
    auto ustat_sum = [&](const Table& t, std::size_t len) {
        IndexSet pool(len);
        for (std::size_t i = 0; i < len; ++i) pool[i] = i + 1;
        double s = 0.0;
        std::vector<std::size_t> args(t.order());
        for_each_subset(pool, t.order(), [&](const IndexSet& J) {
            for (std::size_t i = 0; i < J.size(); ++i) args[i] = x[J[i]];
            s += t.at(args);
        });
        return s;
    };
    return ustat_sum(psi_, n_) * ustat_sum(phi_, m_);
}

double ProductFormula::bound(std::size_t k, std::size_t s) const {
    const std::size_t p = psi_.order(), q = phi_.order();
    if (k > p + q || s > q || s > k || k + q < p || k + p < q) return 0.0;
    const std::size_t r_lo = (p + q - k + 1) / 2;
    const std::size_t r_hi = std::min({p, q - s, p + q - k});
    double total = 0.0;
    for (std::size_t r = r_lo; r <= r_hi && r_hi >= r_lo; ++r) {
        const std::size_t a = 2 * r + k - p - q;
        const double coef = binom(static_cast<double>(n_ - k + s), static_cast<double>(p + q - r - k)) *
                            multinomial(k - s, a, p - r, q - r - s);
        if (coef == 0.0) continue;
        total += coef * contraction_norm_exact(psi_, phi_, {r, p + q - r - k, p, q}, w_);
    }
    return total;
}

ProductCheck product_hoeffding(const Table& psi, const Table& phi, std::size_t n, std::size_t m,
                               const std::vector<std::size_t>& sample_atoms, const std::vector<double>& w) {
    if (sample_atoms.size() != m) throw Refusal("product_hoeffding: sample length must equal m");
    const ProductFormula pf(psi, phi, w, n, m);
    std::vector<std::size_t> x(m + 1, 0);
    for (std::size_t i = 0; i < m; ++i) x[i + 1] = sample_atoms[i];
    ProductCheck out;
    for (const auto& M : pf.admissible_sets()) {
        const double v = pf.component(M, x);
        out.components[M] = v;
        out.sum += v;
    }
    out.product = pf.direct_product(x);
    out.max_error = std::abs(out.sum - out.product);
    return out;
}

ProductCheck product_hoeffding(const Kernel& psi, const Kernel& phi, std::size_t n, std::size_t m,
                               const PointSet& sample, const Distribution& dist) {
    if (!dist.is_finite()) throw Refusal("product_hoeffding: exact mode only (finite distribution)");
    std::vector<std::size_t> atoms(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) atoms[i] = dist.atom_index(sample[i]);
    return product_hoeffding(Table::tabulate(psi, dist, n), Table::tabulate(phi, dist, m), n, m, atoms,
                             dist.weights());
}

double varum_bound(const Table& psi, const Table& phi, std::size_t n, std::size_t m, std::size_t k, std::size_t s,
                   const std::vector<double>& w) {
    return ProductFormula(psi, phi, w, n, m).bound(k, s);
}

}  // namespace ustat
