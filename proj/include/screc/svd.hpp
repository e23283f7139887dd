#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "screc/dense_matrix.hpp"
#include "screc/errors.hpp"

namespace screc {

/// Singular values at or below rank_cutoff * sigma_max count as zero.
inline constexpr double kDefaultRankCutoff = 1e-10;

/// Rank-revealing thin SVD: u (n1 x k) and v (n2 x k) have orthonormal
/// columns, sigma is positive and nonincreasing, k is the numerical rank.
struct SvdFactors {
    DenseMatrix u;
    std::vector<double> sigma;
    DenseMatrix v;

    std::size_t rank() const { return sigma.size(); }
};

/// u * diag(sigma) * v^T
inline DenseMatrix reconstruct(const SvdFactors& f) {
    DenseMatrix us = f.u;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= f.sigma[j];
    return multiply_a_bt(us, f.v);
}

namespace detail {

/// Column-major workspace for the Jacobi sweeps.
struct ColMajor {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    ColMajor() = default;
    ColMajor(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double* col(std::size_t j) { return a.data() + j * rows; }
    const double* col(std::size_t j) const { return a.data() + j * rows; }

    static ColMajor identity(std::size_t n) {
        ColMajor m(n, n);
        for (std::size_t j = 0; j < n; ++j) m.col(j)[j] = 1.0;
        return m;
    }
};

inline double col_dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

inline void rotate_cols(double* x, double* y, std::size_t n, double c, double s) {
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        const double yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

/// One-sided Jacobi orthogonalization of the columns of w, rotations
/// accumulated into v. Pairs whose cosine is already below kOrthTol are
/// skipped, which makes sweeps on a nearly converged (warm-started) input
/// cost little more than the n(n-1)/2 dot products of the scan. Columns
/// whose norm has collapsed to rounding junk (relative square below
/// kZeroColSq) are frozen, otherwise exactly rank-deficient inputs keep
/// re-rotating their residue forever.
inline constexpr double kOrthTol = 1e-14;
inline constexpr double kZeroColSq = 1e-28;
inline constexpr int kMaxSweeps = 60;

inline int one_sided_jacobi(ColMajor& w, ColMajor& v) {
    const std::size_t m = w.rows, n = w.cols;
    if (n < 2) return 0;
    std::vector<double> sq(n);
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double sq_max = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            sq[j] = col_dot(w.col(j), w.col(j), m);
            sq_max = std::max(sq_max, sq[j]);
        }
        const double sq_floor = kZeroColSq * sq_max;
        std::size_t rotations = 0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (sq[p] <= sq_floor || sq[q] <= sq_floor) continue;
                const double apq = col_dot(w.col(p), w.col(q), m);
                const double bound = kOrthTol * std::sqrt(sq[p] * sq[q]);
                if (std::abs(apq) <= bound) continue;
                // Rutishauser rotation zeroing the (p,q) Gram entry.
                const double theta = (sq[q] - sq[p]) / (2.0 * apq);
                const double t =
                    (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate_cols(w.col(p), w.col(q), m, c, s);
                rotate_cols(v.col(p), v.col(q), n, c, s);
                sq[p] -= t * apq;
                sq[q] += t * apq;
                ++rotations;
            }
        }
        if (rotations == 0) return sweep;
    }
    throw ConvergenceError("svd: one-sided Jacobi did not converge within " +
                           std::to_string(kMaxSweeps) + " sweeps");
}

/// w = a * v0, building the product column by column (v0 col-major).
inline ColMajor times_basis(const DenseMatrix& a, const ColMajor& v0) {
    ColMajor w(a.rows(), v0.cols);
    for (std::size_t j = 0; j < v0.cols; ++j) {
        const double* vj = v0.col(j);
        double* wj = w.col(j);
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const double* arow = a.data() + i * a.cols();
            wj[i] = col_dot(arow, vj, a.cols());
        }
    }
    return w;
}

inline ColMajor to_colmajor(const DenseMatrix& a) {
    ColMajor w(a.rows(), a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double* wj = w.col(j);
        for (std::size_t i = 0; i < a.rows(); ++i) wj[i] = a(i, j);
    }
    return w;
}

/// v_new = v0 * v1, both col-major square.
inline ColMajor compose_basis(const ColMajor& v0, const ColMajor& v1) {
    const std::size_t n = v0.rows;
    ColMajor out(n, v1.cols);
    for (std::size_t j = 0; j < v1.cols; ++j) {
        const double* v1j = v1.col(j);
        double* oj = out.col(j);
        for (std::size_t k = 0; k < n; ++k) {
            const double coeff = v1j[k];
            if (coeff == 0.0) continue;
            const double* v0k = v0.col(k);
            for (std::size_t i = 0; i < n; ++i) oj[i] += coeff * v0k[i];
        }
    }
    return out;
}

}  // namespace detail

/// Reusable right-basis carried between factorizations of slowly varying
/// matrices (the solvers' dual iterates). Seeding the sweeps with the
/// previous basis typically cuts them from ~8 to 1-3.
class SvdWorkspace {
public:
    bool compatible(std::size_t rows, std::size_t cols) const {
        return basis_.rows == rows && basis_.cols == cols && rows_in_ == rows &&
               cols_in_ == cols;
    }

    detail::ColMajor basis_;
    std::size_t rows_in_ = 0, cols_in_ = 0;
    bool valid_ = false;
};

namespace detail {

inline SvdFactors svd_impl(const DenseMatrix& a, double rank_cutoff, SvdWorkspace* ws) {
    if (rank_cutoff < 0.0) throw InvalidArgumentError("svd: rank_cutoff must be >= 0");
    if (!a.all_finite()) throw InvalidArgumentError("svd: input has non-finite entries");

    // Work on the orientation with rows >= cols.
    const bool flip = a.rows() < a.cols();
    // Workspaces are keyed to the caller's orientation.
    if (flip) {
        const DenseMatrix at = transpose(a);
        SvdWorkspace* wst = ws;  // basis lives in the transposed orientation
        SvdFactors f = svd_impl(at, rank_cutoff, wst);
        std::swap(f.u, f.v);
        return f;
    }

    const std::size_t m = a.rows(), n = a.cols();
    ColMajor w;
    ColMajor v;
    if (ws != nullptr && ws->valid_ && ws->compatible(m, n)) {
        w = times_basis(a, ws->basis_);
        v = ColMajor::identity(n);
    } else {
        w = to_colmajor(a);
        v = ColMajor::identity(n);
        if (ws != nullptr) ws->valid_ = false;
    }

    one_sided_jacobi(w, v);

    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j)
        norms[j] = std::sqrt(col_dot(w.col(j), w.col(j), m));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

    const ColMajor full_v = [&]() {
        if (ws != nullptr && ws->valid_ && ws->compatible(m, n))
            return compose_basis(ws->basis_, v);
        return v;
    }();

    const double sigma_max = norms.empty() ? 0.0 : norms[order[0]];
    // Values at rounding-junk level are zero regardless of the cutoff.
    const double floor = std::max(rank_cutoff, 1e-14) * sigma_max;
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double s = norms[order[j]];
        if (s <= floor || s == 0.0) break;
        ++k;
    }

    SvdFactors f;
    f.u = DenseMatrix(m, k);
    f.v = DenseMatrix(n, k);
    f.sigma.resize(k);
    for (std::size_t jj = 0; jj < k; ++jj) {
        const std::size_t src = order[jj];
        const double s = norms[src];
        f.sigma[jj] = s;
        const double inv = 1.0 / s;
        const double* wcol = w.col(src);
        for (std::size_t i = 0; i < m; ++i) f.u(i, jj) = wcol[i] * inv;
        const double* vcol = full_v.col(src);
        for (std::size_t i = 0; i < n; ++i) f.v(i, jj) = vcol[i];
    }

    if (ws != nullptr) {
        // Store the sorted full basis for the next call.
        ColMajor sorted(n, n);
        for (std::size_t jj = 0; jj < n; ++jj) {
            const double* src = full_v.col(order[jj]);
            std::copy(src, src + n, sorted.col(jj));
        }
        ws->basis_ = std::move(sorted);
        ws->rows_in_ = m;
        ws->cols_in_ = n;
        ws->valid_ = true;
    }
    return f;
}

}  // namespace detail

inline SvdFactors svd(const DenseMatrix& a, double rank_cutoff = kDefaultRankCutoff) {
    return detail::svd_impl(a, rank_cutoff, nullptr);
}

/// SVD with a warm-started right basis; ws must be reused only across
/// factorizations of same-shaped matrices.
inline SvdFactors svd(const DenseMatrix& a, double rank_cutoff, SvdWorkspace& ws) {
    return detail::svd_impl(a, rank_cutoff, &ws);
}

}  // namespace screc
