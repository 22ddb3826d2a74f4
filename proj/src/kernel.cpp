#include "ustat/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ustat/errors.hpp"

namespace ustat {

RadiusRule power_radius(double c, double beta) {
    return [c, beta](std::size_t n) { return c * std::pow(static_cast<double>(n), -beta); };
}

double circle_distance(double a, double b) {
    constexpr double kTurn = 2.0 * 3.14159265358979323846;
    double d = std::fmod(std::abs(a - b), kTurn) / kTurn;
    return std::min(d, 1.0 - d);
}

namespace kernels {

Kernel constant(std::size_t p, double c) {
    return {"constant", p, false, [c](std::span<const PointView>, std::size_t) { return c; }};
}

Kernel product(std::size_t p) {
    return {"product", p, false, [](std::span<const PointView> x, std::size_t) {
                double v = 1.0;
                for (const auto& xi : x) v *= xi[0];
                return v;
            }};
}

Kernel sum(std::size_t p) {
    return {"sum", p, false, [](std::span<const PointView> x, std::size_t) {
                double v = 0.0;
                for (const auto& xi : x) v += xi[0];
                return v;
            }};
}

Kernel indicator_match(std::size_t p) {
    return {"indicator_match", p, false, [](std::span<const PointView> x, std::size_t) {
                for (std::size_t i = 1; i < x.size(); ++i)
                    if (!std::equal(x[i].begin(), x[i].end(), x[0].begin())) return 0.0;
                return 1.0;
            }};
}

Kernel distance_threshold(RadiusRule radius) {
    return {"distance_threshold", 2, true, [radius](std::span<const PointView> x, std::size_t n) {
                double d2 = 0.0;
                for (std::size_t i = 0; i < x[0].size(); ++i) {
                    const double diff = x[0][i] - x[1][i];
                    d2 += diff * diff;
                }
                const double h = radius(n);
                return (d2 > 0.0 && d2 < h * h) ? 1.0 : 0.0;
            }};
}

Kernel circle_threshold(RadiusRule radius) {
    return {"circle_threshold", 2, true, [radius](std::span<const PointView> x, std::size_t n) {
                return circle_distance(x[0][0], x[1][0]) < radius(n) ? 1.0 : 0.0;
            }};
}

Kernel table(const Distribution& dist, std::size_t p, std::vector<double> values, std::string name) {
    if (!dist.is_finite()) throw Refusal("table kernel: needs a finite distribution");
    const std::size_t a = dist.num_atoms();
    std::size_t expected = 1;
    for (std::size_t i = 0; i < p; ++i) expected *= a;
    if (values.size() != expected)
        throw Refusal("table kernel: expected " + std::to_string(expected) + " values, got " +
                      std::to_string(values.size()));
    return {std::move(name), p, false,
            [dist, a, values = std::move(values)](std::span<const PointView> x, std::size_t) {
                std::size_t flat = 0;
                for (const auto& xi : x) {
                    const std::size_t idx = dist.atom_index(xi);
                    if (idx == a) throw Refusal("table kernel: argument is not an atom");
                    flat = flat * a + idx;
                }
                return values[flat];
            }};
}

Kernel scaled(Kernel k, std::function<double(std::size_t)> scale) {
    auto inner = k.fn;
    k.fn = [inner, scale](std::span<const PointView> x, std::size_t n) { return scale(n) * inner(x, n); };
    k.size_dependent = true;
    k.name += "*scaled";
    return k;
}

Kernel shifted(Kernel k, std::function<double(std::size_t)> shift) {
    auto inner = k.fn;
    k.fn = [inner, shift](std::span<const PointView> x, std::size_t n) { return inner(x, n) - shift(n); };
    k.name += "-shift";
    return k;
}

}  // namespace kernels

double symmetry_defect(const Kernel& k, const Distribution& dist, std::size_t n_param, RngStream& rng,
                       std::size_t trials) {
    const std::size_t p = k.order;
    double worst = 0.0;
    std::vector<std::size_t> perm(p);
    std::vector<PointView> args(p), shuffled(p);
    for (std::size_t t = 0; t < trials; ++t) {
        PointSet pts = dist.sample(p, rng);
        for (std::size_t i = 0; i < p; ++i) args[i] = pts[i];
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = p; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
        for (std::size_t i = 0; i < p; ++i) shuffled[i] = args[perm[i]];
        worst = std::max(worst, std::abs(k(args, n_param) - k(shuffled, n_param)));
    }
    return worst;
}

}  // namespace ustat
