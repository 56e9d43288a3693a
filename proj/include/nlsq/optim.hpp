#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nlsq/model.hpp"
#include "nlsq/numkit.hpp"

namespace nlsq::optim {

// The printed step recurrence divides the low-rank correction by (1 + alpha1);
// the algebraically exact Sherman-Morrison solve of
// ((1/alpha) diag(.sqrt(d2)) + v v^T) s = -g requires (1 + alpha2). Exact is
// the default; AsPrinted is kept behind this switch for fidelity runs.
enum class SmwMode { Exact, AsPrinted };

struct HyperParams {
    double alpha = 5e-3;      // damping scale of the (1/alpha) D term
    double delta = 1.0;       // scaling of the accumulated direction v
    double gamma = 1.0;       // objective scaling, set to B by the harness; recorded only
    double d_init = 1e-5;     // seed value of the squared-gradient accumulator
    double div_floor = 1e-8;  // sign-preserving clamp for reciprocal residuals
    double lr = 1.0;          // baselines only
    double beta1 = 0.9;       // Adam
    double beta2 = 0.999;     // Adam
    double adam_eps = 1e-7;   // Adam
    double adagrad_eps = 1e-10;
    SmwMode smw_mode = SmwMode::Exact;
    bool ablate_accumulation = false; // forces j = 0 each step (Adagrad-reduction mode)

    // Throws ConfigError unless alpha, delta, d_init, div_floor > 0.
    void validate() const;
};

// sqrt(L / (4B)); the order-of-magnitude default for delta. Experiments
// typically scale it (1/3, 2, 0.5 in the reference runs).
double delta_default(std::size_t L, std::size_t B);

struct Nlls1State {
    double f = 0.0;           // running sum of per-batch losses
    numkit::Vector j;         // running sum of gradients
    numkit::Vector d2;        // running sum of squared gradients, seeded at d_init
    std::size_t k = 0;

    Nlls1State(std::size_t n, double d_init)
        : j(n, 0.0), d2(n, d_init) {}
};

// Solves ((1/alpha) diag(.sqrt(a)) + v v^T) s = -g through the two
// Sherman-Morrison dot products; O(n), never forms the matrix. Public so the
// solve can be exercised in isolation.
numkit::Vector smw_step(const numkit::Vector& a, const numkit::Vector& v,
                        const numkit::Vector& g, double alpha, SmwMode mode);

// One accumulate-then-solve step. Mutates state (f, j, d2, k) first, then
// returns s; the caller applies w += s.
numkit::Vector nlls1_step(Nlls1State& state, const model::BatchEval& eval,
                          const HyperParams& hp);

// Rank-L Jacobian estimate of one batch, stored as one value per row plus the
// permutations that place it: row i carries (L/2) * g_i / rho_i at column
// col_of_row[i], where rho_i is the permuted residual assigned to the row.
// Rows landing in the first L-1 permuted slots get distinct columns; all
// remaining rows share the last permuted column.
struct RankLSketch {
    std::vector<std::size_t> row_perm;    // row i -> permuted slot
    std::vector<std::size_t> res_perm;    // column slot -> residual column
    numkit::Vector values;                // the single nonzero of each row
    std::vector<std::size_t> col_of_row;  // row -> column of its nonzero
};

// Draws both permutations from `seed`. Residual magnitudes below `floor` are
// clamped to the floor, keeping their sign. With no clamping the
// reconstructed matrix satisfies (2/L) J r = g exactly.
RankLSketch nllsl_sketch(const model::BatchEval& eval, std::uint64_t seed, double floor);

struct NllsLState {
    double f = 0.0;
    numkit::Vector u;   // running sum of sketch values
    numkit::Vector d2;
    std::size_t k = 0;
    std::uint64_t perm_seed = 0; // base of the per-step permutation stream

    NllsLState(std::size_t n, double d_init, std::uint64_t perm_seed)
        : u(n, 0.0), d2(n, d_init), perm_seed(perm_seed) {}
};

numkit::Vector nllsl_step(NllsLState& state, const model::BatchEval& eval,
                          const HyperParams& hp);

struct FullJacobianState {
    numkit::Vector d2;
    std::size_t k = 0;

    FullJacobianState(std::size_t n, double d_init) : d2(n, d_init) {}
};

// Levenberg-Marquardt style step with the exact batch Jacobian:
// (J J^T + (1/alpha) diag(.sqrt(d2))) s = -g, solved by Sherman-Morrison-
// Woodbury through an L x L inner system. Accumulates d2 first, like nlls1.
numkit::Vector full_jacobian_step(const numkit::Matrix& J, const model::BatchEval& eval,
                                  FullJacobianState& state, const HyperParams& hp);

struct SgdState {
    std::size_t k = 0;
};

struct AdagradState {
    numkit::Vector accum;
    std::size_t k = 0;

    explicit AdagradState(std::size_t n, double init = 0.0) : accum(n, init) {}
};

struct AdamState {
    numkit::Vector m;
    numkit::Vector v;
    std::size_t k = 0;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

numkit::Vector sgd_step(SgdState& state, const model::BatchEval& eval, const HyperParams& hp);
numkit::Vector adagrad_step(AdagradState& state, const model::BatchEval& eval,
                            const HyperParams& hp);
numkit::Vector adam_step(AdamState& state, const model::BatchEval& eval, const HyperParams& hp);

// ---- unified step interface ----

enum class OptimizerKind { Nlls1, NllsL, FullJacobian, Sgd, Adagrad, Adam };

const std::vector<std::string>& optimizer_names();
OptimizerKind optimizer_kind_from_name(const std::string& name);
std::string optimizer_name(OptimizerKind kind);

// Per-kind defaults: NLLS1 seeds d2 at 1e-5 with alpha 5e-3, NLLSL at 1e-10
// with alpha 5e-2; both default delta to delta_default(L, B). Baselines get
// lr 1.0 except Adam (1e-3).
HyperParams default_hyper_params(OptimizerKind kind, std::size_t L, std::size_t B);

struct StepInput {
    const model::BatchEval& eval;
    const model::Mlp& mlp;
    const numkit::Matrix& X;
    const numkit::Matrix& Y;
};

class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual numkit::Vector step(const StepInput& in) = 0;
    virtual std::size_t step_count() const = 0;
    virtual const std::string& name() const = 0;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::size_t n,
                                          const HyperParams& hp, std::uint64_t seed);

} // namespace nlsq::optim
