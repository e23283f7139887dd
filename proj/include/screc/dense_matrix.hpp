#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "screc/errors.hpp"

namespace screc {

/// Dense real matrix, row-major. The single value type shared by every
/// module; zero-sized dimensions are allowed so that rank-0 factor blocks
/// stay representable.
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }

    bool same_shape(const DenseMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    DenseMatrix& operator+=(const DenseMatrix& other) {
        require_same_shape(other, "operator+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    DenseMatrix& operator-=(const DenseMatrix& other) {
        require_same_shape(other, "operator-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
        return *this;
    }

    DenseMatrix& operator*=(double scale) {
        for (double& v : data_) v *= scale;
        return *this;
    }

    /// this += alpha * other
    void add_scaled(const DenseMatrix& other, double alpha) {
        require_same_shape(other, "add_scaled");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * other.data_[i];
    }

    void fill(double value) {
        for (double& v : data_) v = value;
    }

    friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
    friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
    friend DenseMatrix operator*(DenseMatrix a, double s) { return a *= s; }
    friend DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

    void require_same_shape(const DenseMatrix& other, const char* where) const {
        if (!same_shape(other))
            throw DimensionError(std::string(where) + ": shape " + shape_string() +
                                 " vs " + other.shape_string());
    }

    std::string shape_string() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// trace(x^T y), the Euclidean inner product of the matrix space.
inline double dot(const DenseMatrix& x, const DenseMatrix& y) {
    x.require_same_shape(y, "dot");
    double acc = 0.0;
    const double* a = x.data();
    const double* b = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double frobenius_norm(const DenseMatrix& x) {
    double acc = 0.0;
    const double* a = x.data();
    for (std::size_t i = 0; i < x.size(); ++i) acc += a[i] * a[i];
    return std::sqrt(acc);
}

inline double max_abs(const DenseMatrix& x) {
    double best = 0.0;
    const double* a = x.data();
    for (std::size_t i = 0; i < x.size(); ++i) best = std::max(best, std::abs(a[i]));
    return best;
}

inline double sum_abs(const DenseMatrix& x) {
    double acc = 0.0;
    const double* a = x.data();
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(a[i]);
    return acc;
}

inline DenseMatrix transpose(const DenseMatrix& x) {
    DenseMatrix t(x.cols(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) t(j, i) = x(i, j);
    return t;
}

/// c = a * b
inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("multiply: " + a.shape_string() + " * " + b.shape_string());
    DenseMatrix c(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* crow = c.data() + i * n;
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.data() + k * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

/// c = a^T * b
inline DenseMatrix multiply_at_b(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows())
        throw DimensionError("multiply_at_b: " + a.shape_string() + " , " + b.shape_string());
    DenseMatrix c(a.cols(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* arow = a.data() + k * a.cols();
        const double* brow = b.data() + k * n;
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

/// c = a * b^T
inline DenseMatrix multiply_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols())
        throw DimensionError("multiply_a_bt: " + a.shape_string() + " , " + b.shape_string());
    DenseMatrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.data() + i * a.cols();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.data() + j * b.cols();
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
            c(i, j) = acc;
        }
    }
    return c;
}

}  // namespace screc
