#pragma once

#include <vector>

#include "ustat/contraction.hpp"
#include "ustat/finite_table.hpp"
#include "ustat/rng.hpp"
#include "ustat/ustat.hpp"

namespace ustat::testing {

inline std::vector<double> random_weights(std::size_t atoms, RngStream& rng) {
    std::vector<double> w(atoms);
    double tot = 0.0;
    for (auto& x : w) tot += (x = 0.2 + rng.uniform());
    for (auto& x : w) x /= tot;
    return w;
}

inline Table random_table(std::size_t atoms, std::size_t order, RngStream& rng) {
    Table t(atoms, order);
    for (auto& v : t.values()) v = rng.normal();
    return t;
}

inline Table random_symmetric(std::size_t atoms, std::size_t order, RngStream& rng) {
    return symmetrize(random_table(atoms, order, rng));
}

inline Table random_degenerate(std::size_t atoms, std::size_t order, const std::vector<double>& w, RngStream& rng) {
    return exact_hoeffding(random_symmetric(atoms, order, rng), w).psi[order];
}

// Scalar atoms 0, 1, ..., atoms-1 with the given weights.
inline Distribution index_space(const std::vector<double>& w) {
    std::vector<double> v(w.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    return Distribution::finite_scalar(v, w);
}

}  // namespace ustat::testing
