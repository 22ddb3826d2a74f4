#include "ustat/finite_table.hpp"

#include <cmath>

#include "ustat/errors.hpp"

namespace ustat {

std::size_t ipow(std::size_t base, std::size_t exp) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) r *= base;
    return r;
}

Table::Table(std::size_t atoms, std::size_t order, double fill) : atoms_(atoms), order_(order) {
    const double required = std::pow(static_cast<double>(atoms), static_cast<double>(order));
    if (required > kEnumerationGuard) throw BudgetExceeded("table allocation", required, kEnumerationGuard);
    values_.assign(ipow(atoms, order), fill);
}

std::size_t Table::flat(std::span<const std::size_t> idx) const {
    std::size_t f = 0;
    for (std::size_t i : idx) f = f * atoms_ + i;
    return f;
}

Table Table::tabulate(const Kernel& k, const Distribution& dist, std::size_t n_param) {
    if (!dist.is_finite()) throw Refusal("tabulate: distribution is not finite");
    Table t(dist.num_atoms(), k.order);
    const auto& atoms = dist.atoms();
    std::vector<PointView> args(k.order);
    std::size_t flat = 0;
    for_each_index_tuple(dist.num_atoms(), k.order, [&](std::span<const std::size_t> idx) {
        for (std::size_t i = 0; i < idx.size(); ++i) args[i] = atoms[idx[i]];
        t.values_[flat++] = k(args, n_param);
    });
    return t;
}

Kernel Table::as_kernel(const Distribution& dist, std::string name) const {
    Table copy = *this;
    return {std::move(name), order_, false, [dist, copy](std::span<const PointView> x, std::size_t) {
                std::size_t flat = 0;
                for (const auto& xi : x) {
                    const std::size_t idx = dist.atom_index(xi);
                    if (idx == dist.num_atoms()) throw Refusal("table kernel: argument is not an atom");
                    flat = flat * copy.atoms() + idx;
                }
                return copy[flat];
            }};
}

std::vector<double> product_weights(const std::vector<double>& w, std::size_t k) {
    std::vector<double> out{1.0};
    for (std::size_t level = 0; level < k; ++level) {
        std::vector<double> next;
        next.reserve(out.size() * w.size());
        for (double a : out)
            for (double b : w) next.push_back(a * b);
        out.swap(next);
    }
    return out;
}

double table_expect(const Table& t, const std::vector<double>& w) {
    const auto pw = product_weights(w, t.order());
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += pw[i] * t[i];
    return s;
}

double table_inner(const Table& a, const Table& b, const std::vector<double>& w) {
    if (a.order() != b.order() || a.atoms() != b.atoms()) throw Refusal("table_inner: shape mismatch");
    const auto pw = product_weights(w, a.order());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += pw[i] * a[i] * b[i];
    return s;
}

double table_norm(const Table& t, const std::vector<double>& w, double q) {
    const auto pw = product_weights(w, t.order());
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += pw[i] * std::pow(std::abs(t[i]), q);
    return std::pow(s, 1.0 / q);
}

Table integrate_last(const Table& t, const std::vector<double>& w, std::size_t count) {
    if (count > t.order()) throw Refusal("integrate_last: more coordinates than the order");
    const std::size_t inner = ipow(t.atoms(), count);
    const auto pw = product_weights(w, count);
    Table out(t.atoms(), t.order() - count);
    for (std::size_t o = 0; o < out.size(); ++o) {
        double s = 0.0;
        const std::size_t base = o * inner;
        for (std::size_t i = 0; i < inner; ++i) s += pw[i] * t[base + i];
        out[o] = s;
    }
    return out;
}

Table permute_args(const Table& t, std::span<const std::size_t> perm) {
    const std::size_t k = t.order();
    Table out(t.atoms(), k);
    std::vector<std::size_t> src(k);
    std::size_t flat = 0;
    for_each_index_tuple(t.atoms(), k, [&](std::span<const std::size_t> idx) {
        for (std::size_t i = 0; i < k; ++i) src[i] = idx[perm[i]];
        out[flat++] = t.at(src);
    });
    return out;
}

double table_at_subset(const Table& t, std::span<const std::size_t> idx, std::span<const std::size_t> subset) {
    std::size_t f = 0;
    for (std::size_t s : subset) f = f * t.atoms() + idx[s];
    return t[f];
}

}  // namespace ustat
