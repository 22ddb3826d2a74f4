#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "ustat/finite_table.hpp"
#include "ustat/kernel.hpp"
#include "ustat/sample_space.hpp"

namespace ustat {

// Index sets here are 1-based subsets of [m], kept sorted.
using IndexSet = std::vector<std::size_t>;

struct Triple {
    IndexSet A, B, C;
};

struct TripleFamily {
    std::size_t r = 0, n = 0, m = 0, p = 0, q = 0;
    IndexSet L;
    std::vector<Triple> triples;
};

double multinomial(std::size_t total, std::size_t a, std::size_t b, std::size_t c);

// All (A,B,C) with A, B in [n], C in [m], |A| = 2r+|L|-p-q, |B| = p-r, |C| = q-r,
// whose disjoint union is L. Throws if the count disagrees with the multinomial.
TripleFamily pi_triples(std::size_t r, std::size_t n, std::size_t m, const IndexSet& L, std::size_t p, std::size_t q);

// Non-symmetric Hoeffding component f_J of an order-k table; J holds 0-based
// argument positions and the result is a table in those arguments (in order).
Table hoeffding_project_nonsym(const Table& f, const std::vector<double>& w, const std::vector<std::size_t>& J);

// Exact product decomposition of J_p^(n)(psi) J_q^(m)(phi) for degenerate symmetric
// tables on a finite space.
class ProductFormula {
public:
    ProductFormula(Table psi, Table phi, std::vector<double> w, std::size_t n, std::size_t m);

    std::size_t p() const { return psi_.order(); }
    std::size_t q() const { return phi_.order(); }

    // U_M evaluated at atoms x[1..m] (x[0] unused so that indices match [m]).
    double component(const IndexSet& M, const std::vector<std::size_t>& x) const;
    // U_M as a table of order |M| in the variables X_i, i in M (ascending).
    Table component_table(const IndexSet& M) const;

    // Every M in [m] with |M| <= p+q and at most q indices above n.
    std::vector<IndexSet> admissible_sets() const;

    // J_p^(n)(psi) * J_q^(m)(phi) computed directly.
    double direct_product(const std::vector<std::size_t>& x) const;

    double bound(std::size_t k, std::size_t s) const;

private:
    const Table& projected(std::size_t r, std::size_t k) const;

    Table psi_, phi_;
    std::vector<double> w_;
    std::size_t n_, m_;
    mutable std::map<std::pair<std::size_t, std::size_t>, Table> cache_;
};

struct ProductCheck {
    double product = 0.0;
    double sum = 0.0;
    double max_error = 0.0;
    std::map<IndexSet, double> components;
};

// Maps every admissible M to U_M on the given sample (atom indices, length m).
ProductCheck product_hoeffding(const Table& psi, const Table& phi, std::size_t n, std::size_t m,
                               const std::vector<std::size_t>& sample_atoms, const std::vector<double>& w);
ProductCheck product_hoeffding(const Kernel& psi, const Kernel& phi, std::size_t n, std::size_t m,
                               const PointSet& sample, const Distribution& dist);

double varum_bound(const Table& psi, const Table& phi, std::size_t n, std::size_t m, std::size_t k, std::size_t s,
                   const std::vector<double>& w);

}  // namespace ustat
