#pragma once

#include <cstddef>

#include "ustat/finite_table.hpp"
#include "ustat/kernel.hpp"
#include "ustat/ustat.hpp"

namespace ustat {

// psi (order p) contracted with phi (order q): r arguments identified, l of them
// integrated out. The result has order p + q - r - l with argument layout
// (shared-but-free y_1..y_{r-l}, psi's own t_1..t_{p-r}, phi's own s_1..s_{q-r}).
struct ContractionIndex {
    std::size_t r = 0;
    std::size_t l = 0;
    std::size_t p = 0;
    std::size_t q = 0;

    void validate() const;
    std::size_t out_order() const { return p + q - r - l; }
};

struct McBudget {
    std::size_t outer = 4000;
    std::size_t inner = 2000;
    std::size_t batches = 20;
};

struct NormEstimate {
    double value = 0.0;
    double se = 0.0;
    bool clamped = false;  // negative second-moment estimate set to 0
};

Table contract_exact(const Table& psi, const Table& phi, const ContractionIndex& idx, const std::vector<double>& w);
// Norm of the contraction without materialising it.
double contraction_norm_exact(const Table& psi, const Table& phi, const ContractionIndex& idx,
                              const std::vector<double>& w);

Kernel contract(const Kernel& psi, const Kernel& phi, const ContractionIndex& idx, const Distribution& dist,
                const EvalMode& mode, std::size_t n_param);
NormEstimate contraction_norm(const Kernel& psi, const Kernel& phi, const ContractionIndex& idx,
                              const Distribution& dist, const EvalMode& mode, std::size_t n_param,
                              const McBudget& budget = {});

Kernel symmetrize(const Kernel& f);
Table symmetrize(const Table& f);

}  // namespace ustat
