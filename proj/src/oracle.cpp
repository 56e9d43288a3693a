#include "nlsq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlsq/errors.hpp"
#include "nlsq/rng.hpp"

namespace nlsq::oracle {
namespace {

double checked_loss(const LossFn& loss, const numkit::Vector& w) {
    const double value = loss(w);
    if (!std::isfinite(value)) {
        throw PoisonedInputError("fd_gradient: loss evaluated to a non-finite value");
    }
    return value;
}

double clamp_keep_sign(double rho, double floor) {
    if (std::abs(rho) >= floor) return rho;
    return rho < 0.0 ? -floor : floor;
}

} // namespace

std::vector<std::size_t> fd_selected_coords(std::size_t n, const FdSpec& spec) {
    std::vector<std::size_t> coords;
    if (spec.coord_sample == 0 || spec.coord_sample >= n) {
        coords.resize(n);
        for (std::size_t i = 0; i < n; ++i) coords[i] = i;
        return coords;
    }
    Rng rng(spec.seed);
    std::vector<std::size_t> perm = rng.permutation(n);
    coords.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(spec.coord_sample));
    std::sort(coords.begin(), coords.end());
    return coords;
}

numkit::Vector fd_gradient(const LossFn& loss, const numkit::Vector& w, const FdSpec& spec) {
    if (!(spec.step > 0.0)) throw ConfigError("fd_gradient: step must be > 0");
    numkit::Vector grad(w.size(), 0.0);
    numkit::Vector probe = w;
    for (std::size_t i : fd_selected_coords(w.size(), spec)) {
        const double saved = probe[i];
        probe[i] = saved + spec.step;
        const double above = checked_loss(loss, probe);
        probe[i] = saved - spec.step;
        const double below = checked_loss(loss, probe);
        probe[i] = saved;
        grad[i] = (above - below) / (2.0 * spec.step);
    }
    return grad;
}

numkit::Vector dense_smw_solve(const numkit::Vector& a, const numkit::Vector& v, double alpha,
                               const numkit::Vector& g) {
    const std::size_t n = g.size();
    if (a.size() != n || v.size() != n) throw DimensionError("dense_smw_solve: length mismatch");
    if (n * n > 1'000'000) throw CapacityError("dense_smw_solve: n beyond oracle guard");
    numkit::Matrix H(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(a[i] > 0.0)) {
            throw DegenerateInputError("dense_smw_solve: nonpositive diagonal entry");
        }
        for (std::size_t j = 0; j < n; ++j) H(i, j) = v[i] * v[j];
        H(i, i) += std::sqrt(a[i]) / alpha;
    }
    numkit::Vector rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -g[i];
    return numkit::dense_solve(H, rhs);
}

numkit::Matrix brute_rank1(const numkit::Vector& g, const numkit::Vector& r, std::size_t L) {
    if (r.size() != L) throw DimensionError("brute_rank1: residual length != L");
    if (g.size() * L > 1'000'000) throw CapacityError("brute_rank1: n*L beyond oracle guard");
    const double rr = numkit::dot(r, r);
    if (rr == 0.0) throw DegenerateInputError("brute_rank1: zero residual vector");
    const double theta = static_cast<double>(L) / (2.0 * rr);
    numkit::Matrix J(g.size(), L);
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t l = 0; l < L; ++l) J(i, l) = theta * g[i] * r[l];
    }
    return J;
}

numkit::Matrix brute_rankL(const numkit::Vector& g, const numkit::Vector& r, std::size_t L,
                           const std::vector<std::size_t>& row_perm,
                           const std::vector<std::size_t>& res_perm, double floor) {
    const std::size_t n = g.size();
    if (r.size() != L) throw DimensionError("brute_rankL: residual length != L");
    if (row_perm.size() != n || res_perm.size() != L) {
        throw DimensionError("brute_rankL: permutation sizes");
    }
    if (n * L > 1'000'000) throw CapacityError("brute_rankL: n*L beyond oracle guard");

    // P1 moves row i to slot row_perm[i] (so P1^T applied on the left picks
    // row row_perm[i] of R); P2 moves column slot c to column res_perm[c].
    numkit::Matrix P1(n, n, 0.0);
    for (std::size_t b = 0; b < n; ++b) P1(row_perm[b], b) = 1.0;
    numkit::Matrix P1t(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) P1t(i, j) = P1(j, i);
    }
    numkit::Matrix P2(L, L, 0.0);
    for (std::size_t b = 0; b < L; ++b) P2(b, res_perm[b]) = 1.0;

    // beta entries over the permuted residuals: the slot-l reciprocal is
    // 1/(P2 r)_l, so the relation (2/L) J r = g closes after the column
    // permutation is applied.
    const numkit::Vector p2r = numkit::matvec(P2, r);
    numkit::Matrix R(n, L, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t slot = std::min(i, L - 1);
        R(i, slot) = 1.0 / clamp_keep_sign(p2r[slot], floor);
    }

    numkit::Matrix Dg(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) Dg(i, i) = 0.5 * static_cast<double>(L) * g[i];

    return numkit::matmul(numkit::matmul(Dg, P1t), numkit::matmul(R, P2));
}

} // namespace nlsq::oracle
