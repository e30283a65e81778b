#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcbf {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Thrown by solve() when a pivot falls below the singularity threshold.
class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, double pivot)
        : std::runtime_error(what), pivot_(pivot) {}

    [[nodiscard]] double pivot() const noexcept { return pivot_; }

private:
    double pivot_;
};

// Dense real matrix, row-major. Sized for control problems of a handful of
// states; no expression templates, no aliasing tricks.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (!std::isfinite(fill))
            throw NonFiniteError("Matrix fill value is not finite");
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            std::ostringstream os;
            os << "Matrix data length " << data_.size() << " does not match shape " << rows_ << "x" << cols_;
            throw DimensionError(os.str());
        }
        require_finite("Matrix construction");
    }

    // Nested initializer: Matrix{{1, 2}, {3, 4}}.
    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_)
                throw DimensionError("Matrix initializer rows have unequal lengths");
            data_.insert(data_.end(), r.begin(), r.end());
        }
        require_finite("Matrix construction");
    }

    [[nodiscard]] static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1.0;
        return m;
    }

    [[nodiscard]] static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

    [[nodiscard]] static Matrix column(std::vector<double> values) {
        const std::size_t n = values.size();
        return Matrix(n, 1, std::move(values));
    }

    [[nodiscard]] static Matrix row(std::vector<double> values) {
        const std::size_t n = values.size();
        return Matrix(1, n, std::move(values));
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool is_square() const noexcept { return rows_ == cols_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    // Flat access, convenient for vectors.
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

    [[nodiscard]] std::string shape() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    void require_finite(const char* context) const {
        if (!all_finite())
            throw NonFiniteError(std::string(context) + ": matrix " + shape() + " contains NaN or Inf");
    }

    [[nodiscard]] Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                t(j, i) = (*this)(i, j);
        return t;
    }

    [[nodiscard]] Matrix row_at(std::size_t r) const {
        Matrix out(1, cols_);
        for (std::size_t j = 0; j < cols_; ++j)
            out(0, j) = (*this)(r, j);
        return out;
    }

    [[nodiscard]] Matrix col_at(std::size_t c) const {
        Matrix out(rows_, 1);
        for (std::size_t i = 0; i < rows_; ++i)
            out(i, 0) = (*this)(i, c);
        return out;
    }

    // Copy of the block starting at (r0, c0).
    [[nodiscard]] Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
        if (r0 + nr > rows_ || c0 + nc > cols_)
            throw DimensionError("block " + std::to_string(nr) + "x" + std::to_string(nc) + " at (" +
                                 std::to_string(r0) + "," + std::to_string(c0) + ") exceeds " + shape());
        Matrix out(nr, nc);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j)
                out(i, j) = (*this)(r0 + i, c0 + j);
        return out;
    }

    void set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
        if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_)
            throw DimensionError("set_block " + b.shape() + " at (" + std::to_string(r0) + "," +
                                 std::to_string(c0) + ") exceeds " + shape());
        for (std::size_t i = 0; i < b.rows(); ++i)
            for (std::size_t j = 0; j < b.cols(); ++j)
                (*this)(r0 + i, c0 + j) = b(i, j);
    }

    [[nodiscard]] double max_abs() const noexcept {
        double m = 0.0;
        for (double v : data_)
            m = std::max(m, std::abs(v));
        return m;
    }

    [[nodiscard]] double norm() const noexcept {
        double s = 0.0;
        for (double v : data_)
            s += v * v;
        return std::sqrt(s);
    }

    Matrix& operator+=(const Matrix& o) {
        check_same_shape(o, "operator+");
        for (std::size_t i = 0; i < data_.size(); ++i)
            data_[i] += o.data_[i];
        return *this;
    }

    Matrix& operator-=(const Matrix& o) {
        check_same_shape(o, "operator-");
        for (std::size_t i = 0; i < data_.size(); ++i)
            data_[i] -= o.data_[i];
        return *this;
    }

    Matrix& operator*=(double s) {
        for (double& v : data_)
            v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }
    friend Matrix operator-(Matrix a) { return a *= -1.0; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    void check_same_shape(const Matrix& o, const char* op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw DimensionError(std::string(op) + ": shape mismatch " + shape() + " vs " + o.shape());
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[nodiscard]] inline Matrix mat_mul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("mat_mul: cannot multiply " + a.shape() + " by " + b.shape());
    a.require_finite("mat_mul");
    b.require_finite("mat_mul");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0)
                continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Matrix operator*(const Matrix& a, const Matrix& b) { return mat_mul(a, b); }

// A^p with A^0 = I, by repeated multiplication (p is small in practice and
// repeated products keep results reproducible against a rollout).
[[nodiscard]] inline Matrix mat_pow(const Matrix& a, unsigned p) {
    if (!a.is_square())
        throw DimensionError("mat_pow: matrix " + a.shape() + " is not square");
    Matrix result = Matrix::identity(a.rows());
    for (unsigned i = 0; i < p; ++i)
        result = mat_mul(result, a);
    return result;
}

// I + A + ... + A^(l-1), accumulated term by term. A - I may be singular.
[[nodiscard]] inline Matrix power_sum(const Matrix& a, unsigned l) {
    if (!a.is_square())
        throw DimensionError("power_sum: matrix " + a.shape() + " is not square");
    if (l < 1)
        throw std::invalid_argument("power_sum: number of terms must be at least 1");
    Matrix term = Matrix::identity(a.rows());
    Matrix sum = term;
    for (unsigned i = 1; i < l; ++i) {
        term = mat_mul(term, a);
        sum += term;
    }
    return sum;
}

inline constexpr double kSingularPivot = 1e-12;

// Solves a * x = b by LU with partial pivoting. A pivot whose magnitude is
// below kSingularPivot (relative to the largest entry of a) is treated as
// singular.
[[nodiscard]] inline Matrix solve(const Matrix& a, const Matrix& b) {
    if (!a.is_square())
        throw DimensionError("solve: coefficient matrix " + a.shape() + " is not square");
    if (b.rows() != a.rows())
        throw DimensionError("solve: right-hand side " + b.shape() + " incompatible with " + a.shape());
    a.require_finite("solve");
    b.require_finite("solve");

    const std::size_t n = a.rows();
    Matrix lu = a;
    Matrix x = b;
    const double scale = std::max(1.0, a.max_abs());

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(piv, k)))
                piv = i;
        const double pivot = lu(piv, k);
        if (std::abs(pivot) < kSingularPivot * scale) {
            std::ostringstream os;
            os << "solve: matrix " << a.shape() << " is singular to working precision (pivot " << pivot
               << " in column " << k << ")";
            throw SingularMatrixError(os.str(), pivot);
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j)
                std::swap(lu(k, j), lu(piv, j));
            for (std::size_t j = 0; j < x.cols(); ++j)
                std::swap(x(k, j), x(piv, j));
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu(i, k) / pivot;
            lu(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j)
                lu(i, j) -= f * lu(k, j);
            for (std::size_t j = 0; j < x.cols(); ++j)
                x(i, j) -= f * x(k, j);
        }
    }
    for (std::size_t kk = n; kk-- > 0;) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            double s = x(kk, j);
            for (std::size_t c = kk + 1; c < n; ++c)
                s -= lu(kk, c) * x(c, j);
            x(kk, j) = s / lu(kk, kk);
        }
    }
    return x;
}

// Stacks a over b.
[[nodiscard]] inline Matrix vstack(const Matrix& a, const Matrix& b) {
    if (a.empty())
        return b;
    if (b.empty())
        return a;
    if (a.cols() != b.cols())
        throw DimensionError("vstack: column mismatch " + a.shape() + " vs " + b.shape());
    Matrix out(a.rows() + b.rows(), a.cols());
    out.set_block(0, 0, a);
    out.set_block(a.rows(), 0, b);
    return out;
}

[[nodiscard]] inline Matrix block_diag(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() + b.rows(), a.cols() + b.cols());
    out.set_block(0, 0, a);
    out.set_block(a.rows(), a.cols(), b);
    return out;
}

} // namespace pcbf
