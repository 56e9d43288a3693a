#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nlsq/numkit.hpp"

namespace nlsq::oracle {

// Brute-force reference routes used by tests and `selftest`. These share no
// code with the fast paths they check: gradients come from loss evaluations
// only, and the low-rank estimates are built as explicit dense matrices via
// permutation-matrix products.

using LossFn = std::function<double(const numkit::Vector&)>;

struct FdSpec {
    double step = 1e-6;
    std::size_t coord_sample = 0; // 0 = all coordinates
    std::uint64_t seed = 0;       // used only when sampling
};

// Coordinates fd_gradient evaluates under `spec` for a weight vector of
// length n (all of them, or a seeded sample of coord_sample distinct ones).
std::vector<std::size_t> fd_selected_coords(std::size_t n, const FdSpec& spec);

// Central differences (f(w+h e_i) - f(w-h e_i)) / (2h) on the selected
// coordinates; unselected entries are left at zero. A non-finite loss value
// throws PoisonedInputError.
numkit::Vector fd_gradient(const LossFn& loss, const numkit::Vector& w,
                           const FdSpec& spec = {});

// Forms H = (1/alpha) diag(.sqrt(a)) + v v^T densely and solves H s = -g by
// pivoted elimination. a must be positive element-wise.
numkit::Vector dense_smw_solve(const numkit::Vector& a, const numkit::Vector& v, double alpha,
                               const numkit::Vector& g);

// Explicit rank-1 estimate (L / (2 ||r||^2)) g r^T; throws
// DegenerateInputError on a zero residual vector.
numkit::Matrix brute_rank1(const numkit::Vector& g, const numkit::Vector& r, std::size_t L);

// Explicit rank-L estimate (L/2) diag(g) P1^T R P2 as a dense n x L matrix,
// with the reciprocal-residual entries of R taken over permuted residuals and
// clamped at `floor` (sign preserved). Built from actual permutation-matrix
// products, not index arithmetic.
numkit::Matrix brute_rankL(const numkit::Vector& g, const numkit::Vector& r, std::size_t L,
                           const std::vector<std::size_t>& row_perm,
                           const std::vector<std::size_t>& res_perm, double floor);

} // namespace nlsq::oracle
