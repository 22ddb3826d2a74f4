#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ustat/rng.hpp"

namespace ustat {

using PointView = std::span<const double>;

// Contiguous storage for a sequence of points in R^dim.
class PointSet {
public:
    explicit PointSet(std::size_t dim = 1) : dim_(dim) {}
    PointSet(std::size_t dim, std::vector<double> coords);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    bool empty() const { return data_.empty(); }

    PointView operator[](std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    double* mutable_point(std::size_t i) { return data_.data() + i * dim_; }

    void push_back(PointView p);
    void reserve(std::size_t n) { data_.reserve(n * dim_); }
    void resize(std::size_t n) { data_.resize(n * dim_); }
    void clear() { data_.clear(); }

    const std::vector<double>& coords() const { return data_; }

private:
    std::size_t dim_;
    std::vector<double> data_;
};

enum class DistKind { finite, euclidean_density, circle_uniform, cube_uniform };

struct Box {
    std::vector<double> lo;
    std::vector<double> hi;
    double volume() const;
};

// A sample space with its law. Values are immutable once built; copies share
// the underlying storage.
class Distribution {
public:
    using Density = std::function<double(PointView)>;

    static Distribution finite(PointSet atoms, std::vector<double> weights);
    static Distribution finite_scalar(std::vector<double> values, std::vector<double> weights);
    // Uniform weights over the given scalar atoms.
    static Distribution finite_uniform(std::vector<double> values);
    static Distribution cube_uniform(std::size_t dim, double lo = 0.0, double hi = 1.0);
    // Angle parametrisation of the unit circle: uniform on [-pi, pi).
    static Distribution circle_uniform();
    // Bounded density on a box, sampled by rejection against `envelope`.
    static Distribution density(Box box, Density f, double envelope, std::string label = "density");

    DistKind kind() const { return state_->kind; }
    std::size_t dim() const { return state_->dim; }
    bool is_finite() const { return kind() == DistKind::finite; }
    const std::string& label() const { return state_->label; }

    // Finite mode.
    std::size_t num_atoms() const { return state_->atoms.size(); }
    const PointSet& atoms() const { return state_->atoms; }
    const std::vector<double>& weights() const { return state_->weights; }
    // Index of the atom equal to p (exact coordinate match), or num_atoms().
    std::size_t atom_index(PointView p) const;

    // Support box (cube, density, circle angle range).
    const Box& box() const { return state_->box; }
    // Density with respect to Lebesgue measure on the support (continuous kinds).
    double density_at(PointView x) const;
    double envelope() const { return state_->envelope; }

    PointSet sample(std::size_t n, RngStream& rng) const;
    void sample_into(PointSet& out, std::size_t n, RngStream& rng) const;
    // Finite mode: draw an atom index.
    std::size_t sample_atom(RngStream& rng) const;

private:
    struct State {
        DistKind kind = DistKind::finite;
        std::size_t dim = 1;
        std::string label;
        PointSet atoms;
        std::vector<double> weights;
        std::vector<double> cumulative;
        Box box;
        Density density;
        double envelope = 0.0;
    };
    explicit Distribution(std::shared_ptr<const State> s) : state_(std::move(s)) {}
    void draw_one(double* out, RngStream& rng) const;

    std::shared_ptr<const State> state_;
};

// Sum over all m-tuples of atoms of f(tuple) times the product of weights.
// Refuses with BudgetExceeded when |atoms|^m > kEnumerationGuard.
double exact_expect(const Distribution& dist, std::size_t m,
                    const std::function<double(std::span<const PointView>)>& f);

// Visit every m-tuple of atom indices (row-major, last index fastest).
void for_each_index_tuple(std::size_t atoms, std::size_t m,
                          const std::function<void(std::span<const std::size_t>)>& visit);

}  // namespace ustat
