#include <cmath>
#include <cstring>
#include <ostream>

#include "nlsq/bench.hpp"
#include "nlsq/errors.hpp"
#include "nlsq/oracle.hpp"
#include "nlsq/rng.hpp"

// Field-runnable invariant suite: every check pits a fast path against an
// independent brute-force route.

namespace nlsq::bench {
namespace {

numkit::Vector random_vector(Rng& rng, std::size_t n, double lo, double hi) {
    numkit::Vector v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

bool check_fd_vs_backprop(std::ostream& out) {
    const std::vector<model::LayerSpec> specs = {
        {3, 8, model::Activation::Sigmoid},
        {8, 2, model::Activation::Identity},
    };
    model::Mlp mlp = model::init_weights(specs, 7);
    Rng rng(11);
    numkit::Matrix X(6, 3), Y(6, 2);
    for (double& x : X.data()) x = rng.uniform(-1.0, 1.0);
    for (double& y : Y.data()) y = rng.uniform(0.0, 1.0);

    const model::BatchEval eval = model::evaluate_batch(mlp, X, Y);
    const oracle::LossFn loss = [&](const numkit::Vector& w) {
        model::Mlp probe = mlp;
        probe.weights = w;
        return model::evaluate_batch(probe, X, Y).loss;
    };
    const numkit::Vector fd = oracle::fd_gradient(loss, mlp.weights);
    double worst = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
        const double denom = std::max({std::abs(fd[i]), std::abs(eval.gradient[i]), 1e-3});
        worst = std::max(worst, std::abs(fd[i] - eval.gradient[i]) / denom);
    }
    const bool ok = worst < 1e-5;
    out << (ok ? "ok  " : "FAIL") << "  finite differences vs backprop (max rel err "
        << worst << ")\n";
    return ok;
}

bool check_smw_vs_dense(std::ostream& out) {
    Rng rng(23);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(30);
        const numkit::Vector a = random_vector(rng, n, 0.1, 4.0);
        const numkit::Vector v = random_vector(rng, n, -2.0, 2.0);
        const numkit::Vector g = random_vector(rng, n, -2.0, 2.0);
        const double alpha = rng.uniform(0.05, 2.0);
        const numkit::Vector fast = optim::smw_step(a, v, g, alpha, optim::SmwMode::Exact);
        const numkit::Vector slow = oracle::dense_smw_solve(a, v, alpha, g);
        worst = std::max(worst, numkit::norm2(numkit::sub(fast, slow)) /
                                    (1.0 + numkit::norm2(slow)));
    }
    const bool ok = worst < 1e-10;
    out << (ok ? "ok  " : "FAIL") << "  rank-1 SMW step vs dense elimination (worst "
        << worst << ")\n";
    return ok;
}

bool check_rank1_relation(std::ostream& out) {
    Rng rng(31);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(20);
        const std::size_t L = 1 + rng.below(12);
        const numkit::Vector g = random_vector(rng, n, -3.0, 3.0);
        const numkit::Vector r = random_vector(rng, L, 0.2, 3.0);
        const numkit::Matrix J = oracle::brute_rank1(g, r, L);
        const numkit::Vector back =
            numkit::scale(2.0 / static_cast<double>(L), numkit::matvec(J, r));
        worst = std::max(worst, numkit::norm2(numkit::sub(back, g)) /
                                    std::max(1e-30, numkit::norm2(g)));
    }
    const bool ok = worst < 1e-12;
    out << (ok ? "ok  " : "FAIL") << "  rank-1 estimate gradient relation (worst " << worst
        << ")\n";
    return ok;
}

bool check_rankL_relation(std::ostream& out) {
    Rng rng(37);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + rng.below(20);
        const std::size_t L = 2 + rng.below(std::uint64_t(n)); // keep L <= n+1 range modest
        model::BatchEval eval;
        eval.gradient = random_vector(rng, n, -3.0, 3.0);
        eval.residuals = random_vector(rng, L, 0.2, 3.0);
        eval.loss = numkit::dot(eval.residuals, eval.residuals) / static_cast<double>(L);
        const optim::RankLSketch sketch = optim::nllsl_sketch(eval, rng.next_u64(), 1e-8);

        numkit::Matrix J(n, L, 0.0);
        for (std::size_t i = 0; i < n; ++i) J(i, sketch.col_of_row[i]) = sketch.values[i];
        const numkit::Vector back =
            numkit::scale(2.0 / static_cast<double>(L), numkit::matvec(J, eval.residuals));
        worst = std::max(worst, numkit::norm2(numkit::sub(back, eval.gradient)) /
                                    std::max(1e-30, numkit::norm2(eval.gradient)));
    }
    const bool ok = worst < 1e-12;
    out << (ok ? "ok  " : "FAIL") << "  rank-L sketch gradient relation (worst " << worst
        << ")\n";
    return ok;
}

bool check_sketch_vs_brute(std::ostream& out) {
    Rng rng(41);
    bool ok = true;
    for (int trial = 0; trial < 50 && ok; ++trial) {
        const std::size_t n = 3 + rng.below(15);
        const std::size_t L = 2 + rng.below(8);
        model::BatchEval eval;
        eval.gradient = random_vector(rng, n, -3.0, 3.0);
        eval.residuals = random_vector(rng, L, 0.2, 3.0);
        const std::uint64_t seed = rng.next_u64();
        const optim::RankLSketch sketch = optim::nllsl_sketch(eval, seed, 1e-8);
        const numkit::Matrix J = oracle::brute_rankL(eval.gradient, eval.residuals, L,
                                                     sketch.row_perm, sketch.res_perm, 1e-8);
        for (std::size_t i = 0; i < n && ok; ++i) {
            for (std::size_t l = 0; l < L && ok; ++l) {
                const double expected = l == sketch.col_of_row[i] ? sketch.values[i] : 0.0;
                if (std::abs(J(i, l) - expected) > 1e-12 * (1.0 + std::abs(expected))) ok = false;
            }
        }
    }
    out << (ok ? "ok  " : "FAIL") << "  rank-L sketch vs explicit matrix product\n";
    return ok;
}

bool check_adagrad_reduction(std::ostream& out) {
    Rng rng(43);
    const std::size_t n = 12;
    optim::HyperParams hp;
    hp.alpha = 0.25;
    hp.delta = 1.0;
    hp.ablate_accumulation = true;
    optim::Nlls1State nlls(n, hp.d_init);
    optim::AdagradState ada(n, hp.d_init);
    optim::HyperParams ada_hp;
    ada_hp.lr = hp.alpha;
    ada_hp.adagrad_eps = 0.0;

    bool ok = true;
    for (int step = 0; step < 50 && ok; ++step) {
        model::BatchEval eval;
        eval.gradient = random_vector(rng, n, -2.0, 2.0);
        eval.residuals = random_vector(rng, 4, -1.0, 1.0);
        const numkit::Vector s1 = optim::nlls1_step(nlls, eval, hp);
        const numkit::Vector s2 = optim::adagrad_step(ada, eval, ada_hp);
        ok = std::memcmp(s1.data(), s2.data(), n * sizeof(double)) == 0;
    }
    out << (ok ? "ok  " : "FAIL") << "  ablated NLLS1 bit-identical to Adagrad\n";
    return ok;
}

bool check_dense_solve(std::ostream& out) {
    Rng rng(47);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(25);
        numkit::Matrix A(n, n);
        for (double& x : A.data()) x = rng.uniform(-1.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) A(i, i) += static_cast<double>(n); // dominant
        const numkit::Vector b = random_vector(rng, n, -2.0, 2.0);
        const numkit::Vector x = numkit::dense_solve(A, b);
        worst = std::max(worst, numkit::norm_inf(numkit::sub(numkit::matvec(A, x), b)));
    }
    const bool ok = worst < 1e-9;
    out << (ok ? "ok  " : "FAIL") << "  dense solve residual (worst " << worst << ")\n";
    return ok;
}

} // namespace

bool run_selftest(std::ostream& out) {
    bool ok = true;
    ok &= check_dense_solve(out);
    ok &= check_fd_vs_backprop(out);
    ok &= check_smw_vs_dense(out);
    ok &= check_rank1_relation(out);
    ok &= check_rankL_relation(out);
    ok &= check_sketch_vs_brute(out);
    ok &= check_adagrad_reduction(out);
    out << (ok ? "selftest passed\n" : "selftest FAILED\n");
    return ok;
}

} // namespace nlsq::bench
