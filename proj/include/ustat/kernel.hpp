#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ustat/sample_space.hpp"

namespace ustat {

using KernelFn = std::function<double(std::span<const PointView>, std::size_t)>;

// A symmetric kernel of order p, possibly depending on the sample size n.
struct Kernel {
    std::string name;
    std::size_t order = 0;
    bool size_dependent = false;
    KernelFn fn;

    double operator()(std::span<const PointView> args, std::size_t n) const { return fn(args, n); }
};

using RadiusRule = std::function<double(std::size_t)>;

// h_n = c * n^(-beta).
RadiusRule power_radius(double c, double beta);

namespace kernels {

Kernel constant(std::size_t p, double c);
// Product of first coordinates.
Kernel product(std::size_t p);
// Sum of first coordinates.
Kernel sum(std::size_t p);
// 1 if all arguments coincide.
Kernel indicator_match(std::size_t p);
// Order 2: 1{0 < |x - y| < h_n} with the Euclidean norm.
Kernel distance_threshold(RadiusRule radius);
// Order 2 on angles: 1{d(x, y) < h_n}, d the arc length on the unit circle scaled to [0, 1/2].
Kernel circle_threshold(RadiusRule radius);
// User table over a finite space: values indexed row-major by atom tuples.
Kernel table(const Distribution& dist, std::size_t p, std::vector<double> values, std::string name = "table");
// psi(x) * scale(n).
Kernel scaled(Kernel k, std::function<double(std::size_t)> scale);
// psi(x) - shift(n).
Kernel shifted(Kernel k, std::function<double(std::size_t)> shift);

}  // namespace kernels

// Circular distance between two angles, in units of the full turn (so in [0, 1/2]).
double circle_distance(double a, double b);

// Largest |psi(x) - psi(x permuted)| over random tuples and random permutations.
double symmetry_defect(const Kernel& k, const Distribution& dist, std::size_t n_param, RngStream& rng,
                       std::size_t trials = 200);

}  // namespace ustat
