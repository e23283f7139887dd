#pragma once

#include <cmath>

#include "screc/dense_matrix.hpp"
#include "screc/svd.hpp"

namespace screc {

namespace detail {

/// Rebuild sum_j f(sigma_j) u_j v_j^T keeping only columns with f > 0.
template <typename Fn>
DenseMatrix rebuild_shrunk(const SvdFactors& f, Fn&& shrink) {
    std::size_t k = 0;
    while (k < f.rank() && shrink(f.sigma[k]) > 0.0) ++k;
    DenseMatrix us(f.u.rows(), k);
    DenseMatrix vs(f.v.rows(), k);
    for (std::size_t j = 0; j < k; ++j) {
        const double s = shrink(f.sigma[j]);
        for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) = f.u(i, j) * s;
        for (std::size_t i = 0; i < vs.rows(); ++i) vs(i, j) = f.v(i, j);
    }
    if (k == 0) return DenseMatrix(f.u.rows(), f.v.rows());
    return multiply_a_bt(us, vs);
}

}  // namespace detail

/// Singular value shrinkage: the unique minimizer of
///   theta * ||X||_* + 1/2 ||X - Z||_F^2,
/// i.e. U max(Sigma - theta, 0) V^T.
inline DenseMatrix sv_shrink(const DenseMatrix& z, double theta) {
    if (!(theta > 0.0)) throw InvalidArgumentError("sv_shrink: theta must be positive");
    const SvdFactors f = svd(z, 0.0);
    return detail::rebuild_shrunk(f, [theta](double s) { return std::max(s - theta, 0.0); });
}

/// sv_shrink on a precomputed factorization (solver fast path).
inline DenseMatrix sv_shrink(const SvdFactors& f, double theta) {
    if (!(theta > 0.0)) throw InvalidArgumentError("sv_shrink: theta must be positive");
    return detail::rebuild_shrunk(f, [theta](double s) { return std::max(s - theta, 0.0); });
}

/// Entrywise soft threshold: the unique minimizer of
///   theta * ||S||_1 + 1/2 ||S - Z||_F^2.
inline DenseMatrix soft_threshold(const DenseMatrix& z, double theta) {
    if (!(theta > 0.0)) throw InvalidArgumentError("soft_threshold: theta must be positive");
    DenseMatrix out(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double v = z[i];
        const double mag = std::abs(v) - theta;
        out[i] = mag > 0.0 ? (v > 0.0 ? mag : -mag) : 0.0;
    }
    return out;
}

}  // namespace screc
