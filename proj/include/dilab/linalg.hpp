#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dilab/errors.hpp"

namespace dilab {

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2_sq(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(norm2_sq(a)); }

inline double norm_inf(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(data_.data() + r * cols_, cols_);
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    // y = W x
    std::vector<double> matvec(std::span<const double> x) const {
        if (x.size() != cols_) throw ShapeError("matvec: dimension mismatch");
        std::vector<double> y(rows_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r) {
            const double* w = data_.data() + r * cols_;
            double s = 0.0;
            for (std::size_t c = 0; c < cols_; ++c) s += w[c] * x[c];
            y[r] = s;
        }
        return y;
    }

    // y = W^T x
    std::vector<double> matvec_t(std::span<const double> x) const {
        if (x.size() != rows_) throw ShapeError("matvec_t: dimension mismatch");
        std::vector<double> y(cols_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r) {
            const double xr = x[r];
            const double* w = data_.data() + r * cols_;
            for (std::size_t c = 0; c < cols_; ++c) y[c] += w[c] * xr;
        }
        return y;
    }

    double frobenius_norm() const { return norm2(data_); }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace dilab
