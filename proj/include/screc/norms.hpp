#pragma once

#include <numeric>

#include "screc/dense_matrix.hpp"
#include "screc/svd.hpp"

namespace screc {

enum class NormKind {
    kFrobenius,  ///< sqrt of the sum of squares
    kSpectral,   ///< largest singular value
    kNuclear,    ///< sum of singular values
    kMaxAbs,     ///< entrywise max magnitude
    kSumAbs,     ///< entrywise 1-norm
};

inline double spectral_norm(const DenseMatrix& x) {
    const SvdFactors f = svd(x, 0.0);
    return f.sigma.empty() ? 0.0 : f.sigma.front();
}

inline double nuclear_norm(const DenseMatrix& x) {
    const SvdFactors f = svd(x, 0.0);
    return std::accumulate(f.sigma.begin(), f.sigma.end(), 0.0);
}

inline double matrix_norm(const DenseMatrix& x, NormKind kind) {
    switch (kind) {
        case NormKind::kFrobenius: return frobenius_norm(x);
        case NormKind::kSpectral: return spectral_norm(x);
        case NormKind::kNuclear: return nuclear_norm(x);
        case NormKind::kMaxAbs: return max_abs(x);
        case NormKind::kSumAbs: return sum_abs(x);
    }
    throw InvalidArgumentError("matrix_norm: unknown kind");
}

}  // namespace screc
