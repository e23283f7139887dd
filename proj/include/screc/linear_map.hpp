#pragma once

#include <cstdint>
#include <functional>

#include "screc/dense_matrix.hpp"
#include "screc/errors.hpp"
#include "screc/rng.hpp"

namespace screc {

/// Linear operator on the n1 x n2 matrix space. Compositions such as
/// P_T P_Omega P_T are expressed as apply lambdas; adjoint optional
/// (self-adjoint maps use apply for both directions).
struct LinearMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::function<DenseMatrix(const DenseMatrix&)> apply;
    bool self_adjoint = false;
    std::function<DenseMatrix(const DenseMatrix&)> apply_adjoint;  ///< optional

    DenseMatrix adjoint(const DenseMatrix& x) const {
        if (apply_adjoint) return apply_adjoint(x);
        if (self_adjoint) return apply(x);
        throw InvalidArgumentError("LinearMap: adjoint unavailable for non-self-adjoint map");
    }
};

inline LinearMap identity_map(std::size_t rows, std::size_t cols) {
    return {rows, cols, [](const DenseMatrix& x) { return x; }, true, {}};
}

struct PowerNormResult {
    double value = 0.0;       ///< estimate of the operator norm
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;    ///< ||A*A z - value^2 z||_F on the final unit iterate
};

/// Operator norm sup ||A X||_F / ||X||_F by power iteration on A*A with a
/// seeded Gaussian start. The Rayleigh quotient of the iterates is monotone
/// nondecreasing; convergence is declared once it stays stationary within
/// tol for a few consecutive steps (a plain residual test never fires on
/// the clustered spectra of sampling operators). On budget exhaustion the
/// best estimate is returned with converged = false.
inline PowerNormResult power_op_norm(const LinearMap& a, std::uint64_t seed,
                                     double tol = 1e-8, int max_iters = 1000) {
    if (!(tol > 0.0)) throw InvalidArgumentError("power_op_norm: tol must be positive");
    if (max_iters < 1) throw InvalidArgumentError("power_op_norm: max_iters must be >= 1");

    GaussianStream gauss(seed);
    DenseMatrix z(a.rows, a.cols);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = gauss.next();
    double zn = frobenius_norm(z);
    if (zn == 0.0) return {0.0, 0, true, 0.0};
    z *= 1.0 / zn;

    PowerNormResult out;
    double prev = 0.0;
    int stable = 0;
    constexpr int kPatience = 3;
    for (int k = 1; k <= max_iters; ++k) {
        DenseMatrix w = a.adjoint(a.apply(z));  // A*A z, z unit
        const double rayleigh = dot(z, w);      // estimate of sigma_max^2
        out.value = std::sqrt(std::max(rayleigh, 0.0));
        out.iterations = k;
        {
            DenseMatrix r = w;
            r.add_scaled(z, -rayleigh);
            out.residual = frobenius_norm(r);
        }
        const double scale = std::max(rayleigh, 1e-300);
        stable = (k > 1 && std::abs(rayleigh - prev) <= tol * scale) ? stable + 1 : 0;
        if (stable >= kPatience) {
            out.converged = true;
            return out;
        }
        prev = rayleigh;
        const double wn = frobenius_norm(w);
        if (wn == 0.0) {  // z in the kernel: norm estimate is 0 along this start
            out.value = 0.0;
            out.converged = true;
            return out;
        }
        z = w;
        z *= 1.0 / wn;
    }
    return out;  // converged stays false
}

struct CgOptions {
    double tol = 1e-10;
    int max_iters = 500;
    /// Re-applied to the iterate and residual every step to suppress drift
    /// out of the operator's invariant subspace.
    std::function<DenseMatrix(const DenseMatrix&)> constrain;
};

/// Conjugate gradients for a self-adjoint map that is positive definite on
/// the subspace containing rhs. Stops at ||A x - rhs||_F <= tol ||rhs||_F.
inline DenseMatrix cg_solve(const LinearMap& a, const DenseMatrix& rhs, const CgOptions& opts = {}) {
    if (!a.self_adjoint)
        throw InvalidArgumentError("cg_solve: map must be flagged self-adjoint");
    const double rhs_norm = frobenius_norm(rhs);
    DenseMatrix x(rhs.rows(), rhs.cols());
    if (rhs_norm == 0.0) return x;

    DenseMatrix r = opts.constrain ? opts.constrain(rhs) : rhs;
    DenseMatrix p = r;
    double rs_old = dot(r, r);
    for (int k = 0; k < opts.max_iters; ++k) {
        if (std::sqrt(rs_old) <= opts.tol * rhs_norm) return x;
        const DenseMatrix ap = a.apply(p);
        const double p_ap = dot(p, ap);
        if (!(p_ap > 0.0))
            throw RegimeError("cg_solve: operator not positive definite along search direction");
        const double alpha = rs_old / p_ap;
        x.add_scaled(p, alpha);
        r.add_scaled(ap, -alpha);
        if (opts.constrain) {
            x = opts.constrain(x);
            r = opts.constrain(r);
        }
        const double rs_new = dot(r, r);
        if (std::sqrt(rs_new) <= opts.tol * rhs_norm) return x;
        p *= rs_new / rs_old;
        p += r;
        rs_old = rs_new;
    }
    throw ConvergenceError("cg_solve: no convergence in " + std::to_string(opts.max_iters) +
                           " iterations (residual " + std::to_string(std::sqrt(rs_old) / rhs_norm) +
                           " relative)");
}

}  // namespace screc
