#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "screc/linear_map.hpp"
#include "screc/mc.hpp"
#include "screc/norms.hpp"
#include "screc/problem_gen.hpp"
#include "screc/rng.hpp"
#include "screc/support_set.hpp"
#include "screc/tangent.hpp"

using namespace screc;

namespace {

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    GaussianStream g(seed);
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = g.next();
    return m;
}

/// Dense matricization of a self-adjoint operator on the n1 x n2 space:
/// column j holds op(E_j) flattened, E_j the j-th basis matrix. This is the
/// oracle path against which the matrix-free implementations are compared.
DenseMatrix matricize(const LinearMap& op) {
    const std::size_t dim = op.rows * op.cols;
    DenseMatrix dense(dim, dim);
    for (std::size_t j = 0; j < dim; ++j) {
        DenseMatrix e(op.rows, op.cols);
        e[j] = 1.0;
        const DenseMatrix col = op.apply(e);
        for (std::size_t i = 0; i < dim; ++i) dense(i, j) = col[i];
    }
    return dense;
}

/// Pseudo-inverse solve of the matricized system via the library SVD
/// (a different algorithmic path from CG).
DenseMatrix dense_pinv_solve(const DenseMatrix& dense_op, const DenseMatrix& rhs) {
    const SvdFactors f = svd(dense_op, 1e-12);
    DenseMatrix rhs_vec(rhs.size(), 1);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs_vec(i, 0) = rhs[i];
    const DenseMatrix ut_rhs = multiply_at_b(f.u, rhs_vec);
    DenseMatrix scaled = ut_rhs;
    for (std::size_t i = 0; i < f.rank(); ++i) scaled(i, 0) /= f.sigma[i];
    const DenseMatrix x_vec = multiply(f.v, scaled);
    DenseMatrix x(rhs.rows(), rhs.cols());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = x_vec(i, 0);
    return x;
}

}  // namespace

TEST_CASE("power_op_norm of projections and the identity") {
    const SupportSet omega(4, 4, {{0, 0}, {1, 2}, {3, 3}});
    LinearMap pom{4, 4, [omega](const DenseMatrix& x) { return project_omega(x, omega); }, true,
                  {}};
    const PowerNormResult r1 = power_op_norm(pom, 7);
    CHECK(r1.converged);
    CHECK(r1.value == doctest::Approx(1.0).epsilon(1e-10));

    const PowerNormResult r2 = power_op_norm(identity_map(5, 3), 8);
    CHECK(r2.converged);
    CHECK(r2.value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("power_op_norm flags budget exhaustion and keeps the estimate") {
    LinearMap ident = identity_map(4, 4);
    const PowerNormResult r = power_op_norm(ident, 3, 1e-8, 1);
    CHECK_FALSE(r.converged);
    CHECK(r.value > 0.9);
    CHECK_THROWS_AS(power_op_norm(ident, 3, 0.0, 10), InvalidArgumentError);
}

TEST_CASE("power_op_norm matches the dense matricization on a 10x10 instance") {
    const McInstance inst = make_mc_instance(10, 10, 2, 0.5, 11);
    const TangentBasis t = tangent_of(inst.m_true);
    const LinearMap op = tangent_sampling_operator(t, inst.omega);
    const double dense_norm = spectral_norm(matricize(op));
    const PowerNormResult est = power_op_norm(op, 21, 1e-10, 3000);
    CHECK(std::abs(est.value - dense_norm) <= 2e-3 * dense_norm);
}

TEST_CASE("tangent-restricted sampling operator norm sits in the expected band") {
    // Bernoulli(0.5) sampling at n=60: operator norm within [rho/2, 3 rho/2]
    // plus 0.15 slack.
    const McInstance inst = make_mc_instance(60, 60, 2, 0.5, 12);
    const TangentBasis t = tangent_of(inst.m_true);
    const PowerNormResult est =
        power_op_norm(tangent_sampling_operator(t, inst.omega), 13, 1e-9, 3000);
    CHECK(est.value >= 0.5 / 2 - 0.15);
    CHECK(est.value <= 1.5 * 0.5 + 0.15);
}

TEST_CASE("cg_solve on scaled identities") {
    LinearMap twice{6, 4, [](const DenseMatrix& x) { return x * 2.0; }, true, {}};
    const DenseMatrix rhs = random_matrix(6, 4, 5);
    const DenseMatrix x = cg_solve(twice, rhs);
    CHECK(frobenius_norm(x - rhs * 0.5) <= 1e-10 * frobenius_norm(rhs));
    CHECK(frobenius_norm(cg_solve(twice, DenseMatrix(6, 4))) == 0.0);
}

TEST_CASE("cg_solve with full sampling is the identity on the tangent space") {
    const McInstance inst = make_mc_instance(12, 9, 2, 1.0, 6);
    REQUIRE(inst.omega.is_full());
    const TangentBasis t = tangent_of(inst.m_true);
    CgOptions opts;
    opts.constrain = [t](const DenseMatrix& z) { return project_tangent(z, t); };
    const DenseMatrix x =
        cg_solve(tangent_sampling_operator(t, inst.omega), project_tangent(inst.m_true, t), opts);
    CHECK(frobenius_norm(x - inst.m_true) <= 1e-8 * frobenius_norm(inst.m_true));
}

TEST_CASE("cg_solve matches the dense pseudo-inverse on a 10x10 instance") {
    const McInstance inst = make_mc_instance(10, 10, 2, 0.6, 17);
    const TangentBasis t = tangent_of(inst.m_true);
    const LinearMap op = tangent_sampling_operator(t, inst.omega);

    const DenseMatrix rhs = project_tangent(inst.m_true, t);
    CgOptions opts;
    opts.constrain = [t](const DenseMatrix& z) { return project_tangent(z, t); };
    const DenseMatrix x_cg = cg_solve(op, rhs, opts);
    const DenseMatrix x_dense = dense_pinv_solve(matricize(op), rhs);
    CHECK(frobenius_norm(x_cg - x_dense) <= 1e-8 * frobenius_norm(x_dense));
}

TEST_CASE("cg_solve error paths") {
    LinearMap zero{3, 3, [](const DenseMatrix& x) { return DenseMatrix(x.rows(), x.cols()); },
                   true, {}};
    CHECK_THROWS_AS(cg_solve(zero, random_matrix(3, 3, 1)), RegimeError);

    LinearMap nonsym{3, 3, [](const DenseMatrix& x) { return x; }, false, {}};
    CHECK_THROWS_AS(cg_solve(nonsym, random_matrix(3, 3, 2)), InvalidArgumentError);

    // severely ill-conditioned diagonal scaling with a tiny budget
    LinearMap ill{4, 4,
                  [](const DenseMatrix& x) {
                      DenseMatrix y = x;
                      for (std::size_t i = 0; i < y.size(); ++i)
                          y[i] *= 1.0 / (1.0 + 1e9 * static_cast<double>(i));
                      return y;
                  },
                  true,
                  {}};
    CgOptions tight;
    tight.max_iters = 2;
    CHECK_THROWS_AS(cg_solve(ill, random_matrix(4, 4, 3), tight), ConvergenceError);
}

TEST_CASE("linear map adjoint contract") {
    LinearMap shift{2, 2,
                    [](const DenseMatrix& x) {
                        DenseMatrix y(2, 2);
                        y(0, 0) = x(1, 1);
                        return y;
                    },
                    false,
                    {}};
    CHECK_THROWS_AS(shift.adjoint(DenseMatrix(2, 2)), InvalidArgumentError);
    // self-adjoint probe: <A x, y> == <x, A y> for the sampling operator
    const McInstance inst = make_mc_instance(8, 8, 2, 0.5, 23);
    const TangentBasis t = tangent_of(inst.m_true);
    const LinearMap op = tangent_sampling_operator(t, inst.omega);
    const DenseMatrix x = random_matrix(8, 8, 31);
    const DenseMatrix y = random_matrix(8, 8, 32);
    CHECK(dot(op.apply(x), y) == doctest::Approx(dot(x, op.apply(y))).epsilon(1e-8));
}
