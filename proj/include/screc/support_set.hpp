#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "screc/dense_matrix.hpp"
#include "screc/errors.hpp"

namespace screc {

/// Index set over an n1 x n2 matrix space: the sampling pattern in matrix
/// completion, the corruption support in robust PCA. Indices are 0-based,
/// strictly sorted row-major, duplicate-free.
class SupportSet {
public:
    using Index = std::pair<std::uint32_t, std::uint32_t>;

    SupportSet() = default;

    SupportSet(std::size_t rows, std::size_t cols, std::vector<Index> indices)
        : rows_(rows), cols_(cols), indices_(std::move(indices)) {
        std::sort(indices_.begin(), indices_.end());
        for (std::size_t k = 0; k < indices_.size(); ++k) {
            const auto& [i, j] = indices_[k];
            if (i >= rows_ || j >= cols_)
                throw DimensionError("SupportSet: index (" + std::to_string(i) + "," +
                                     std::to_string(j) + ") outside " + std::to_string(rows_) +
                                     "x" + std::to_string(cols_));
            if (k > 0 && indices_[k] == indices_[k - 1])
                throw InvalidArgumentError("SupportSet: duplicate index (" + std::to_string(i) +
                                           "," + std::to_string(j) + ")");
        }
        linear_.reserve(indices_.size());
        for (const auto& [i, j] : indices_)
            linear_.push_back(static_cast<std::size_t>(i) * cols_ + j);
    }

    static SupportSet empty(std::size_t rows, std::size_t cols) {
        return SupportSet(rows, cols, {});
    }

    static SupportSet full(std::size_t rows, std::size_t cols) {
        std::vector<Index> all;
        all.reserve(rows * cols);
        for (std::uint32_t i = 0; i < rows; ++i)
            for (std::uint32_t j = 0; j < cols; ++j) all.emplace_back(i, j);
        return SupportSet(rows, cols, std::move(all));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    /// m = |Omega|
    std::size_t count() const { return indices_.size(); }
    bool is_empty() const { return indices_.empty(); }
    bool is_full() const { return indices_.size() == rows_ * cols_; }

    /// Sampling ratio m / (n1 n2).
    double fraction() const {
        return rows_ * cols_ == 0 ? 0.0
                                  : static_cast<double>(count()) /
                                        static_cast<double>(rows_ * cols_);
    }

    bool contains(std::uint32_t i, std::uint32_t j) const {
        return std::binary_search(indices_.begin(), indices_.end(), Index{i, j});
    }

    const std::vector<Index>& indices() const { return indices_; }

    /// Row-major flat offsets, sorted; the fast path for projection loops.
    const std::vector<std::size_t>& linear() const { return linear_; }

    bool matches(const DenseMatrix& x) const {
        return x.rows() == rows_ && x.cols() == cols_;
    }

    void require_matches(const DenseMatrix& x, const char* where) const {
        if (!matches(x))
            throw DimensionError(std::string(where) + ": matrix " + x.shape_string() +
                                 " vs support " + std::to_string(rows_) + "x" +
                                 std::to_string(cols_));
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Index> indices_;
    std::vector<std::size_t> linear_;
};

/// P_Omega: keep entries on the support, zero the rest.
inline DenseMatrix project_omega(const DenseMatrix& x, const SupportSet& omega) {
    omega.require_matches(x, "project_omega");
    DenseMatrix out(x.rows(), x.cols());
    for (std::size_t flat : omega.linear()) out[flat] = x[flat];
    return out;
}

/// P_Omega-perp = I - P_Omega.
inline DenseMatrix project_omega_complement(const DenseMatrix& x, const SupportSet& omega) {
    omega.require_matches(x, "project_omega_complement");
    DenseMatrix out = x;
    for (std::size_t flat : omega.linear()) out[flat] = 0.0;
    return out;
}

/// Support of the nonzero entries of x.
inline SupportSet support_of(const DenseMatrix& x) {
    std::vector<SupportSet::Index> idx;
    for (std::uint32_t i = 0; i < x.rows(); ++i)
        for (std::uint32_t j = 0; j < x.cols(); ++j)
            if (x(i, j) != 0.0) idx.emplace_back(i, j);
    return SupportSet(x.rows(), x.cols(), std::move(idx));
}

/// Entrywise sign matrix; zeros stay zero.
inline DenseMatrix sign_matrix(const DenseMatrix& x) {
    DenseMatrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
    return out;
}

}  // namespace screc
