#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ustat/contraction.hpp"
#include "ustat/kernel.hpp"
#include "ustat/sample_space.hpp"
#include "ustat/ustat.hpp"

namespace ustat {

struct Quad {
    int j = 0, m = 0, a = 0, b = 0;
    bool operator==(const Quad&) const = default;
};

struct QuadrupleSet {
    int i = 0, k = 0, r = 0, l = 0, p = 0;
    std::vector<Quad> members;
};

// Direct evaluation of the seven membership rules.
bool q_rules_hold(int i, int k, int r, int l, int p, const Quad& q);
QuadrupleSet q_set(int i, int k, int r, int l, int p);

struct RateFit {
    double slope = 0.0;
    double lo = 0.0, hi = 0.0;
    bool floored = false;   // some values were replaced by 1e-300
    bool all_zero = false;  // every value is numerically zero
};
RateFit fit_rate(const std::vector<std::size_t>& n_grid, const std::vector<double>& values);

enum class CheckKind { limit, vanish, bounded };

struct CheckSeries {
    std::string id;
    CheckKind kind = CheckKind::vanish;
    int v = 0, u = 0, r = 0, l = 0;
    Quad quad;               // Theorem I only
    double exponent = 0.0;   // power of n (before epsilon)
    std::vector<double> values;
    RateFit fit;
    bool pass = false;
    double eps = -1.0;       // bounded checks: largest passing epsilon, -1 if none
    std::string remark;      // p = 2 checklist label, if this check is one of them
};

struct ConditionOptions {
    std::vector<double> eps_grid{0.1, 0.25, 0.5};
    double zero_tol = 1e-13;         // values below this count as exact zeros
    double trend_tol = 0.1;          // b_k^2 Cauchy diagnostic threshold
    double bounded_ratio = 2.0;      // max <= ratio * median
    double degeneracy_tol = 1e-9;    // check_degenerate refusal threshold
    std::size_t plugin_atoms = 48;   // Monte Carlo mode for I/II: empirical measure size
    McBudget budget{};
};

struct ConditionReport {
    std::string theorem;
    std::size_t p = 0;
    std::vector<std::size_t> n_grid;
    std::vector<double> sigma2;
    std::vector<CheckSeries> checks;
    std::vector<double> b2;        // k = 1..p
    std::vector<double> alpha2;    // k = 1..p
    std::vector<double> b2_trend;  // max successive relative change, k = 1..p
    bool a_pass = true, b_pass = true, c_pass = true;
    double eps_min = -1.0;
    std::string verdict;           // pass / fail / inconclusive
    std::vector<std::string> notes;

    const CheckSeries* find_remark(const std::string& label) const;
};

ConditionReport check_theorem_I(const Kernel& k, const Distribution& dist, std::size_t p,
                                const std::vector<std::size_t>& n_grid, const EvalMode& mode,
                                const ConditionOptions& opt = {});
ConditionReport check_theorem_II(const Kernel& k, const Distribution& dist, std::size_t p,
                                 const std::vector<std::size_t>& n_grid, const EvalMode& mode,
                                 const ConditionOptions& opt = {});
ConditionReport check_degenerate(const Kernel& k, const Distribution& dist, std::size_t p,
                                 const std::vector<std::size_t>& n_grid, const EvalMode& mode,
                                 const ConditionOptions& opt = {});

// Finite-space draw of the empirical measure used by Monte Carlo mode in I/II.
Distribution empirical_plugin(const Distribution& dist, std::size_t atoms, std::uint64_t seed);

// |psi_i *_r^l psi_k| and K * max over Q(i,k,r,l) of |g_j *_a^b g_m| at one n,
// with K = 2^(i+k), the number of terms in the expansion of psi_i and psi_k.
struct ContractionBound {
    int i, k, r, l;
    double lhs;
    double rhs;
};
std::vector<ContractionBound> contraction_bound_table(const ExactHoeffding& h, const std::vector<double>& w);

}  // namespace ustat
