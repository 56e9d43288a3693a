#include "nlsq/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlsq/errors.hpp"
#include "nlsq/rng.hpp"

namespace nlsq::optim {
namespace {

void require_finite_gradient(const numkit::Vector& g) {
    if (!numkit::all_finite(g)) {
        throw PoisonedInputError("optimizer step: gradient contains NaN/Inf");
    }
}

double batch_loss_increment(const model::BatchEval& eval) {
    // ||r||^2 / L, recomputed from the residuals the state actually saw.
    if (eval.residuals.empty()) throw DimensionError("optimizer step: empty residual vector");
    return numkit::dot(eval.residuals, eval.residuals) /
           static_cast<double>(eval.residuals.size());
}

double clamp_reciprocal(double rho, double floor) {
    if (std::abs(rho) >= floor) return rho;
    return rho < 0.0 ? -floor : floor;
}

} // namespace

void HyperParams::validate() const {
    if (!(alpha > 0.0)) throw ConfigError("hyperparams: alpha must be > 0");
    if (!(delta > 0.0)) throw ConfigError("hyperparams: delta must be > 0");
    if (!(d_init > 0.0)) throw ConfigError("hyperparams: d_init must be > 0");
    if (!(div_floor > 0.0)) throw ConfigError("hyperparams: div_floor must be > 0");
}

double delta_default(std::size_t L, std::size_t B) {
    return std::sqrt(static_cast<double>(L) / (4.0 * static_cast<double>(B)));
}

numkit::Vector smw_step(const numkit::Vector& a, const numkit::Vector& v,
                        const numkit::Vector& g, double alpha, SmwMode mode) {
    const std::size_t n = g.size();
    if (a.size() != n || v.size() != n) throw DimensionError("smw_step: length mismatch");

    numkit::Vector s1(n), s2(n);
    double alpha1 = 0.0, alpha2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double root = std::sqrt(a[i]);
        s1[i] = -(alpha * g[i]) / root;
        s2[i] = (alpha * v[i]) / root;
        alpha1 += v[i] * s1[i];
        alpha2 += v[i] * s2[i];
    }
    const double denom = 1.0 + (mode == SmwMode::Exact ? alpha2 : alpha1);
    const double coef = alpha1 / denom;
    numkit::Vector s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = s1[i] - coef * s2[i];
    return s;
}

numkit::Vector nlls1_step(Nlls1State& state, const model::BatchEval& eval,
                          const HyperParams& hp) {
    const std::size_t n = state.j.size();
    if (eval.gradient.size() != n) throw DimensionError("nlls1_step: gradient length mismatch");
    require_finite_gradient(eval.gradient);

    state.f += batch_loss_increment(eval);
    if (hp.ablate_accumulation) {
        std::fill(state.j.begin(), state.j.end(), 0.0);
    } else {
        for (std::size_t i = 0; i < n; ++i) state.j[i] += eval.gradient[i];
    }
    for (std::size_t i = 0; i < n; ++i) state.d2[i] += eval.gradient[i] * eval.gradient[i];

    numkit::Vector v(n, 0.0);
    if (state.f > 0.0) {
        const double scale = hp.delta / std::sqrt(state.f);
        for (std::size_t i = 0; i < n; ++i) v[i] = scale * state.j[i];
    }
    numkit::Vector s = smw_step(state.d2, v, eval.gradient, hp.alpha, hp.smw_mode);
    state.k += 1;
    return s;
}

RankLSketch nllsl_sketch(const model::BatchEval& eval, std::uint64_t seed, double floor) {
    const std::size_t n = eval.gradient.size();
    const std::size_t L = eval.residuals.size();
    if (L < 1) throw DimensionError("nllsl_sketch: empty residual vector");
    if (!(floor > 0.0)) throw ConfigError("nllsl_sketch: floor must be > 0");

    Rng rng(seed);
    RankLSketch sketch;
    sketch.row_perm = rng.permutation(n);
    sketch.res_perm = rng.permutation(L);
    sketch.values.resize(n);
    sketch.col_of_row.resize(n);

    const double half_L = static_cast<double>(L) / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t slot = std::min(sketch.row_perm[i], L - 1);
        const std::size_t col = sketch.res_perm[slot];
        const double rho = clamp_reciprocal(eval.residuals[col], floor);
        sketch.col_of_row[i] = col;
        sketch.values[i] = half_L * eval.gradient[i] / rho;
    }
    return sketch;
}

numkit::Vector nllsl_step(NllsLState& state, const model::BatchEval& eval,
                          const HyperParams& hp) {
    const std::size_t n = state.u.size();
    if (eval.gradient.size() != n) throw DimensionError("nllsl_step: gradient length mismatch");
    require_finite_gradient(eval.gradient);

    state.f += batch_loss_increment(eval);
    for (std::size_t i = 0; i < n; ++i) state.d2[i] += eval.gradient[i] * eval.gradient[i];

    const RankLSketch sketch =
        nllsl_sketch(eval, derive_seed(state.perm_seed, state.k), hp.div_floor);
    for (std::size_t i = 0; i < n; ++i) state.u[i] += sketch.values[i];

    numkit::Vector v(n, 0.0);
    if (state.f > 0.0) {
        const double scale = hp.delta / std::sqrt(state.f);
        for (std::size_t i = 0; i < n; ++i) v[i] = scale * state.u[i];
    }
    numkit::Vector s = smw_step(state.d2, v, eval.gradient, hp.alpha, hp.smw_mode);
    state.k += 1;
    return s;
}

numkit::Vector full_jacobian_step(const numkit::Matrix& J, const model::BatchEval& eval,
                                  FullJacobianState& state, const HyperParams& hp) {
    const std::size_t n = state.d2.size();
    const std::size_t L = eval.residuals.size();
    if (eval.gradient.size() != n) throw DimensionError("full_jacobian_step: gradient length");
    if (J.rows() != n || J.cols() != L) throw DimensionError("full_jacobian_step: J shape");
    require_finite_gradient(eval.gradient);

    const numkit::Vector& g = eval.gradient;
    for (std::size_t i = 0; i < n; ++i) state.d2[i] += g[i] * g[i];

    // ainv = diag of A^{-1} where A = (1/alpha) diag(.sqrt(d2))
    numkit::Vector ainv(n);
    for (std::size_t i = 0; i < n; ++i) ainv[i] = hp.alpha / std::sqrt(state.d2[i]);

    numkit::Vector ainv_g(n);
    for (std::size_t i = 0; i < n; ++i) ainv_g[i] = ainv[i] * g[i];

    // M = I_L + J^T A^{-1} J (L x L), rhs = J^T A^{-1} g
    numkit::Matrix M = numkit::Matrix::identity(L);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = ainv[i];
        for (std::size_t p = 0; p < L; ++p) {
            const double jip = J(i, p) * w;
            if (jip == 0.0) continue;
            for (std::size_t q = 0; q < L; ++q) M(p, q) += jip * J(i, q);
        }
    }
    const numkit::Vector rhs = numkit::matvec_t(J, ainv_g);
    const numkit::Vector z = numkit::dense_solve(M, rhs);
    const numkit::Vector Jz = numkit::matvec(J, z);

    numkit::Vector s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = -ainv_g[i] + ainv[i] * Jz[i];
    state.k += 1;
    return s;
}

numkit::Vector sgd_step(SgdState& state, const model::BatchEval& eval, const HyperParams& hp) {
    require_finite_gradient(eval.gradient);
    numkit::Vector s(eval.gradient.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = -hp.lr * eval.gradient[i];
    state.k += 1;
    return s;
}

numkit::Vector adagrad_step(AdagradState& state, const model::BatchEval& eval,
                            const HyperParams& hp) {
    const std::size_t n = state.accum.size();
    if (eval.gradient.size() != n) throw DimensionError("adagrad_step: gradient length mismatch");
    require_finite_gradient(eval.gradient);
    numkit::Vector s(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = eval.gradient[i];
        state.accum[i] += g * g;
        s[i] = -(hp.lr * g) / std::sqrt(state.accum[i] + hp.adagrad_eps);
    }
    state.k += 1;
    return s;
}

numkit::Vector adam_step(AdamState& state, const model::BatchEval& eval, const HyperParams& hp) {
    const std::size_t n = state.m.size();
    if (eval.gradient.size() != n) throw DimensionError("adam_step: gradient length mismatch");
    require_finite_gradient(eval.gradient);
    state.k += 1;
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.k));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.k));
    numkit::Vector s(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = eval.gradient[i];
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g;
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        s[i] = -hp.lr * mhat / (std::sqrt(vhat) + hp.adam_eps);
    }
    return s;
}

// ---- unified step interface ----

const std::vector<std::string>& optimizer_names() {
    static const std::vector<std::string> names = {
        "nlls1", "nllsl", "full_jacobian", "sgd", "adagrad", "adam",
    };
    return names;
}

OptimizerKind optimizer_kind_from_name(const std::string& name) {
    if (name == "nlls1") return OptimizerKind::Nlls1;
    if (name == "nllsl") return OptimizerKind::NllsL;
    if (name == "full_jacobian") return OptimizerKind::FullJacobian;
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "adagrad") return OptimizerKind::Adagrad;
    if (name == "adam") return OptimizerKind::Adam;
    throw ConfigError("unknown optimizer: " + name);
}

std::string optimizer_name(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::Nlls1: return "nlls1";
        case OptimizerKind::NllsL: return "nllsl";
        case OptimizerKind::FullJacobian: return "full_jacobian";
        case OptimizerKind::Sgd: return "sgd";
        case OptimizerKind::Adagrad: return "adagrad";
        case OptimizerKind::Adam: return "adam";
    }
    return "?";
}

HyperParams default_hyper_params(OptimizerKind kind, std::size_t L, std::size_t B) {
    HyperParams hp;
    hp.delta = delta_default(L, B);
    hp.gamma = static_cast<double>(B);
    switch (kind) {
        case OptimizerKind::Nlls1:
        case OptimizerKind::FullJacobian:
            hp.alpha = 5e-3;
            hp.d_init = 1e-5;
            break;
        case OptimizerKind::NllsL:
            hp.alpha = 5e-2;
            hp.d_init = 1e-10;
            break;
        case OptimizerKind::Sgd:
        case OptimizerKind::Adagrad:
            hp.lr = 1.0;
            break;
        case OptimizerKind::Adam:
            hp.lr = 1e-3;
            break;
    }
    return hp;
}

namespace {

class Nlls1Optimizer final : public Optimizer {
public:
    Nlls1Optimizer(std::size_t n, const HyperParams& hp)
        : hp_(hp), state_(n, hp.d_init), name_("nlls1") {}

    numkit::Vector step(const StepInput& in) override {
        return nlls1_step(state_, in.eval, hp_);
    }
    std::size_t step_count() const override { return state_.k; }
    const std::string& name() const override { return name_; }

private:
    HyperParams hp_;
    Nlls1State state_;
    std::string name_;
};

class NllsLOptimizer final : public Optimizer {
public:
    NllsLOptimizer(std::size_t n, const HyperParams& hp, std::uint64_t seed)
        : hp_(hp), state_(n, hp.d_init, seed), name_("nllsl") {}

    numkit::Vector step(const StepInput& in) override {
        return nllsl_step(state_, in.eval, hp_);
    }
    std::size_t step_count() const override { return state_.k; }
    const std::string& name() const override { return name_; }

private:
    HyperParams hp_;
    NllsLState state_;
    std::string name_;
};

class FullJacobianOptimizer final : public Optimizer {
public:
    FullJacobianOptimizer(std::size_t n, const HyperParams& hp)
        : hp_(hp), state_(n, hp.d_init), name_("full_jacobian") {}

    numkit::Vector step(const StepInput& in) override {
        const numkit::Matrix J = model::exact_jacobian(in.mlp, in.X, in.Y);
        return full_jacobian_step(J, in.eval, state_, hp_);
    }
    std::size_t step_count() const override { return state_.k; }
    const std::string& name() const override { return name_; }

private:
    HyperParams hp_;
    FullJacobianState state_;
    std::string name_;
};

class SgdOptimizer final : public Optimizer {
public:
    explicit SgdOptimizer(const HyperParams& hp) : hp_(hp), name_("sgd") {}

    numkit::Vector step(const StepInput& in) override { return sgd_step(state_, in.eval, hp_); }
    std::size_t step_count() const override { return state_.k; }
    const std::string& name() const override { return name_; }

private:
    HyperParams hp_;
    SgdState state_;
    std::string name_;
};

class AdagradOptimizer final : public Optimizer {
public:
    AdagradOptimizer(std::size_t n, const HyperParams& hp)
        : hp_(hp), state_(n), name_("adagrad") {}

    numkit::Vector step(const StepInput& in) override {
        return adagrad_step(state_, in.eval, hp_);
    }
    std::size_t step_count() const override { return state_.k; }
    const std::string& name() const override { return name_; }

private:
    HyperParams hp_;
    AdagradState state_;
    std::string name_;
};

class AdamOptimizer final : public Optimizer {
public:
    AdamOptimizer(std::size_t n, const HyperParams& hp) : hp_(hp), state_(n), name_("adam") {}

    numkit::Vector step(const StepInput& in) override { return adam_step(state_, in.eval, hp_); }
    std::size_t step_count() const override { return state_.k; }
    const std::string& name() const override { return name_; }

private:
    HyperParams hp_;
    AdamState state_;
    std::string name_;
};

} // namespace

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::size_t n,
                                          const HyperParams& hp, std::uint64_t seed) {
    hp.validate();
    switch (kind) {
        case OptimizerKind::Nlls1: return std::make_unique<Nlls1Optimizer>(n, hp);
        case OptimizerKind::NllsL: return std::make_unique<NllsLOptimizer>(n, hp, seed);
        case OptimizerKind::FullJacobian: return std::make_unique<FullJacobianOptimizer>(n, hp);
        case OptimizerKind::Sgd: return std::make_unique<SgdOptimizer>(hp);
        case OptimizerKind::Adagrad: return std::make_unique<AdagradOptimizer>(n, hp);
        case OptimizerKind::Adam: return std::make_unique<AdamOptimizer>(n, hp);
    }
    throw ConfigError("unknown optimizer kind");
}

} // namespace nlsq::optim
