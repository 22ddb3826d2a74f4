#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ustat/kernel.hpp"
#include "ustat/sample_space.hpp"

namespace ustat {

// A real function on A^k for a finite space with A atoms, stored row-major with
// the first argument most significant. This is the exact-mode representation of
// kernels, Hoeffding components and contractions.
class Table {
public:
    Table() = default;
    Table(std::size_t atoms, std::size_t order, double fill = 0.0);

    std::size_t atoms() const { return atoms_; }
    std::size_t order() const { return order_; }
    std::size_t size() const { return values_.size(); }

    double operator[](std::size_t flat) const { return values_[flat]; }
    double& operator[](std::size_t flat) { return values_[flat]; }
    double at(std::span<const std::size_t> idx) const { return values_[flat(idx)]; }
    std::size_t flat(std::span<const std::size_t> idx) const;
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    static Table tabulate(const Kernel& k, const Distribution& dist, std::size_t n_param);
    static Table constant(std::size_t atoms, double c) { return Table(atoms, 0, c); }

    // Kernel view that looks arguments up by atom index.
    Kernel as_kernel(const Distribution& dist, std::string name) const;

private:
    std::size_t atoms_ = 0;
    std::size_t order_ = 0;
    std::vector<double> values_;
};

std::size_t ipow(std::size_t base, std::size_t exp);

// Product weights w(i1)...w(ik) for every flat index of an order-k table.
std::vector<double> product_weights(const std::vector<double>& w, std::size_t k);

double table_expect(const Table& t, const std::vector<double>& w);
double table_inner(const Table& a, const Table& b, const std::vector<double>& w);
double table_norm(const Table& t, const std::vector<double>& w, double q = 2.0);
// Integrates out the last `count` arguments.
Table integrate_last(const Table& t, const std::vector<double>& w, std::size_t count);
// out(x_0..x_{k-1}) = t(x_{perm[0]}, ..., x_{perm[k-1]}).
Table permute_args(const Table& t, std::span<const std::size_t> perm);
// Evaluates t on a subset of coordinates of a larger tuple.
double table_at_subset(const Table& t, std::span<const std::size_t> idx, std::span<const std::size_t> subset);

}  // namespace ustat
