#pragma once

#include "screc/dense_matrix.hpp"
#include "screc/svd.hpp"

namespace screc {

/// Orthonormal row/column factors (U, V) of a low-rank matrix, spanning the
/// tangent subspace T = { U X1^T + X2 V^T }. rank() == 0 is valid and makes
/// the tangent projector the zero map.
struct TangentBasis {
    DenseMatrix u;  ///< n1 x r
    DenseMatrix v;  ///< n2 x r

    std::size_t rank() const { return u.cols(); }
    std::size_t rows() const { return u.rows(); }
    std::size_t cols() const { return v.rows(); }
};

inline TangentBasis tangent_basis(const SvdFactors& f) { return {f.u, f.v}; }

inline TangentBasis tangent_of(const DenseMatrix& m, double rank_cutoff = kDefaultRankCutoff) {
    return tangent_basis(svd(m, rank_cutoff));
}

enum class TangentSide {
    kTangent,  ///< P_T
    kNormal,   ///< P_T-perp = I - P_T
};

/// P_T x = U U^T x + x V V^T - U U^T x V V^T, or its complement.
inline DenseMatrix project_tangent(const DenseMatrix& x, const TangentBasis& t,
                                   TangentSide side = TangentSide::kTangent) {
    if (x.rows() != t.rows() || x.cols() != t.cols())
        throw DimensionError("project_tangent: matrix " + x.shape_string() + " vs basis " +
                             std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
    if (t.rank() == 0) {
        if (side == TangentSide::kTangent) return DenseMatrix(x.rows(), x.cols());
        return x;
    }
    const DenseMatrix utx = multiply_at_b(t.u, x);         // r x n2
    const DenseMatrix xv = multiply(x, t.v);               // n1 x r
    const DenseMatrix utxv = multiply(utx, t.v);           // r x r
    DenseMatrix pt = multiply(t.u, utx);                   // U U^T x
    pt += multiply_a_bt(xv, t.v);                          // + x V V^T
    pt -= multiply(t.u, multiply_a_bt(utxv, t.v));         // - U U^T x V V^T
    if (side == TangentSide::kTangent) return pt;
    DenseMatrix out = x;
    out -= pt;
    return out;
}

/// U V^T, the nuclear-norm subgradient anchor at the basis' matrix.
inline DenseMatrix uv_product(const TangentBasis& t) {
    if (t.rank() == 0) return DenseMatrix(t.rows(), t.cols());
    return multiply_a_bt(t.u, t.v);
}

}  // namespace screc
