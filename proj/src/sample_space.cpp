#include "ustat/sample_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ustat/errors.hpp"

namespace ustat {

PointSet::PointSet(std::size_t dim, std::vector<double> coords) : dim_(dim), data_(std::move(coords)) {
    if (dim_ == 0) throw Refusal("PointSet: dimension must be >= 1");
    if (data_.size() % dim_ != 0) throw Refusal("PointSet: coordinate count not a multiple of dim");
}

void PointSet::push_back(PointView p) {
    if (p.size() != dim_) throw Refusal("PointSet::push_back: dimension mismatch");
    data_.insert(data_.end(), p.begin(), p.end());
}

double Box::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
    return v;
}

Distribution Distribution::finite(PointSet atoms, std::vector<double> weights) {
    if (atoms.dim() == 0) throw Refusal("finite distribution: dimension must be >= 1");
    if (atoms.size() == 0) throw Refusal("finite distribution: no atoms");
    if (atoms.size() != weights.size()) throw Refusal("finite distribution: atom/weight count mismatch");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw Refusal("finite distribution: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "finite distribution: weights sum to " << total << ", not 1";
        throw Refusal(msg.str());
    }
    auto s = std::make_shared<State>();
    s->kind = DistKind::finite;
    s->dim = atoms.dim();
    s->label = "finite";
    s->atoms = std::move(atoms);
    s->weights = std::move(weights);
    s->cumulative.resize(s->weights.size());
    std::partial_sum(s->weights.begin(), s->weights.end(), s->cumulative.begin());
    s->cumulative.back() = 1.0;
    return Distribution(std::move(s));
}

Distribution Distribution::finite_scalar(std::vector<double> values, std::vector<double> weights) {
    return finite(PointSet(1, std::move(values)), std::move(weights));
}

Distribution Distribution::finite_uniform(std::vector<double> values) {
    const std::size_t a = values.size();
    if (a == 0) throw Refusal("finite distribution: no atoms");
    std::vector<double> w(a, 1.0 / static_cast<double>(a));
    // Make the weights sum to exactly 1 in floating point.
    w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
    return finite_scalar(std::move(values), std::move(w));
}

Distribution Distribution::cube_uniform(std::size_t dim, double lo, double hi) {
    if (dim == 0) throw Refusal("cube_uniform: dimension must be >= 1");
    if (!(hi > lo)) throw Refusal("cube_uniform: empty box");
    auto s = std::make_shared<State>();
    s->kind = DistKind::cube_uniform;
    s->dim = dim;
    s->label = "cube_uniform";
    s->box = Box{std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
    s->envelope = 1.0 / s->box.volume();
    return Distribution(std::move(s));
}

Distribution Distribution::circle_uniform() {
    auto s = std::make_shared<State>();
    s->kind = DistKind::circle_uniform;
    s->dim = 1;
    s->label = "circle_uniform";
    s->box = Box{{-std::numbers::pi}, {std::numbers::pi}};
    s->envelope = 1.0 / (2.0 * std::numbers::pi);
    return Distribution(std::move(s));
}

Distribution Distribution::density(Box box, Density f, double envelope, std::string label) {
    if (box.lo.empty() || box.lo.size() != box.hi.size())
        throw Refusal("density distribution: malformed support box");
    for (std::size_t i = 0; i < box.lo.size(); ++i)
        if (!(box.hi[i] > box.lo[i])) throw Refusal("density distribution: empty support box");
    if (!f) throw Refusal("density distribution: missing density");
    if (!(envelope > 0.0) || !std::isfinite(envelope))
        throw Refusal("density distribution: envelope constant must be positive and finite");
    auto s = std::make_shared<State>();
    s->kind = DistKind::euclidean_density;
    s->dim = box.lo.size();
    s->label = std::move(label);
    s->box = std::move(box);
    s->density = std::move(f);
    s->envelope = envelope;
    return Distribution(std::move(s));
}

std::size_t Distribution::atom_index(PointView p) const {
    const auto& atoms = state_->atoms;
    for (std::size_t i = 0; i < atoms.size(); ++i)
        if (std::equal(p.begin(), p.end(), atoms[i].begin())) return i;
    return atoms.size();
}

double Distribution::density_at(PointView x) const {
    const auto& s = *state_;
    for (std::size_t i = 0; i < s.dim; ++i)
        if (x[i] < s.box.lo[i] || x[i] > s.box.hi[i]) return 0.0;
    switch (s.kind) {
        case DistKind::cube_uniform:
        case DistKind::circle_uniform:
            return s.envelope;
        case DistKind::euclidean_density:
            return s.density(x);
        case DistKind::finite:
            break;
    }
    throw Refusal("density_at: finite distributions have no Lebesgue density");
}

std::size_t Distribution::sample_atom(RngStream& rng) const {
    const auto& c = state_->cumulative;
    const double u = rng.uniform();
    const auto it = std::upper_bound(c.begin(), c.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - c.begin()), c.size() - 1);
}

void Distribution::draw_one(double* out, RngStream& rng) const {
    const auto& s = *state_;
    switch (s.kind) {
        case DistKind::finite: {
            const auto p = s.atoms[sample_atom(rng)];
            std::copy(p.begin(), p.end(), out);
            return;
        }
        case DistKind::cube_uniform:
        case DistKind::circle_uniform:
            for (std::size_t i = 0; i < s.dim; ++i) out[i] = rng.uniform(s.box.lo[i], s.box.hi[i]);
            return;
        case DistKind::euclidean_density: {
            for (;;) {
                for (std::size_t i = 0; i < s.dim; ++i) out[i] = rng.uniform(s.box.lo[i], s.box.hi[i]);
                const double fx = s.density(PointView(out, s.dim));
                if (fx > s.envelope) {
                    std::ostringstream msg;
                    msg.precision(17);
                    msg << "rejection sampling: density " << fx << " exceeds envelope " << s.envelope
                        << " at point (";
                    for (std::size_t i = 0; i < s.dim; ++i) msg << (i ? ", " : "") << out[i];
                    msg << ")";
                    throw Refusal(msg.str());
                }
                if (rng.uniform() * s.envelope < fx) return;
            }
        }
    }
}

void Distribution::sample_into(PointSet& out, std::size_t n, RngStream& rng) const {
    out = PointSet(dim());
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) draw_one(out.mutable_point(i), rng);
}

PointSet Distribution::sample(std::size_t n, RngStream& rng) const {
    PointSet out(dim());
    sample_into(out, n, rng);
    return out;
}

void for_each_index_tuple(std::size_t atoms, std::size_t m,
                          const std::function<void(std::span<const std::size_t>)>& visit) {
    std::vector<std::size_t> idx(m, 0);
    if (m == 0) {
        visit(idx);
        return;
    }
    if (atoms == 0) return;
    for (;;) {
        visit(idx);
        std::size_t pos = m;
        while (pos > 0) {
            --pos;
            if (++idx[pos] < atoms) break;
            idx[pos] = 0;
            if (pos == 0) return;
        }
    }
}

double exact_expect(const Distribution& dist, std::size_t m,
                    const std::function<double(std::span<const PointView>)>& f) {
    if (!dist.is_finite()) throw Refusal("exact_expect: distribution is not finite");
    const double required = std::pow(static_cast<double>(dist.num_atoms()), static_cast<double>(m));
    if (required > kEnumerationGuard) throw BudgetExceeded("exact_expect", required, kEnumerationGuard);
    const auto& atoms = dist.atoms();
    const auto& w = dist.weights();
    std::vector<PointView> args(m);
    double total = 0.0;
    for_each_index_tuple(dist.num_atoms(), m, [&](std::span<const std::size_t> idx) {
        double weight = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            weight *= w[idx[i]];
            args[i] = atoms[idx[i]];
        }
        if (weight != 0.0) total += weight * f(args);
    });
    return total;
}

}  // namespace ustat
