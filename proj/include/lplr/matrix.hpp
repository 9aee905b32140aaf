#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "error.hpp"

namespace lplr {

using Vector = std::vector<double>;

//
// Row-major dense matrix of doubles. A default-constructed matrix is the
// empty 0x0 placeholder; every sized matrix has rows, cols >= 1.
//
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(checked_size(rows, cols), fill)
    {
    }

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data))
    {
        if (data_.size() != checked_size(rows, cols))
            throw Error(Errc::ShapeMismatch, "data length does not equal rows*cols");
    }

    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        data_.reserve(checked_size(rows_, cols_));
        for (const auto& r : rows) {
            if (r.size() != cols_)
                throw Error(Errc::ShapeMismatch, "ragged initializer list");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static DenseMatrix identity(std::size_t n)
    {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1.0;
        return m;
    }

    static DenseMatrix diagonal(std::span<const double> entries)
    {
        DenseMatrix m(entries.size(), entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i)
            m(i, i) = entries[i];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept
    {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const noexcept
    {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept
    {
        return {data_.data() + i * cols_, cols_};
    }

    Vector col(std::size_t j) const
    {
        Vector c(rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            c[i] = (*this)(i, j);
        return c;
    }

    void set_col(std::size_t j, std::span<const double> values)
    {
        assert(values.size() == rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            (*this)(i, j) = values[i];
    }

    DenseMatrix transpose() const
    {
        DenseMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                t(j, i) = (*this)(i, j);
        return t;
    }

    bool all_finite() const noexcept
    {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    DenseMatrix& operator+=(const DenseMatrix& o)
    {
        require_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i)
            data_[i] += o.data_[i];
        return *this;
    }
    DenseMatrix& operator-=(const DenseMatrix& o)
    {
        require_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i)
            data_[i] -= o.data_[i];
        return *this;
    }
    DenseMatrix& operator*=(double s) noexcept
    {
        for (auto& v : data_)
            v *= s;
        return *this;
    }

    friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
    friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
    friend DenseMatrix operator*(DenseMatrix a, double s) { return a *= s; }
    friend DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    static std::size_t checked_size(std::size_t rows, std::size_t cols)
    {
        if ((rows == 0) != (cols == 0))
            throw Error(Errc::ShapeMismatch, "matrix must have rows, cols >= 1");
        return rows * cols;
    }

    void require_same_shape(const DenseMatrix& o) const
    {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw Error(Errc::ShapeMismatch, "elementwise operation on matrices of different shape");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Diagonal matrix stored as its entries.
struct DiagMatrix {
    Vector entries;

    std::size_t dim() const noexcept { return entries.size(); }
    double operator[](std::size_t i) const noexcept { return entries[i]; }
    DenseMatrix dense() const { return DenseMatrix::diagonal(entries); }

    friend bool operator==(const DiagMatrix&, const DiagMatrix&) = default;
};

inline DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b)
{
    if (a.cols() != b.rows())
        throw Error(Errc::ShapeMismatch, "matrix product: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto crow = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0)
                continue;
            auto brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                crow[j] += aik * brow[j];
        }
    }
    return c;
}

inline Vector operator*(const DenseMatrix& a, std::span<const double> x)
{
    if (a.cols() != x.size())
        throw Error(Errc::ShapeMismatch, "matrix-vector product: size mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j)
            s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

inline Vector operator*(const DenseMatrix& a, const Vector& x)
{
    return a * std::span<const double>(x);
}

/// Aᵀ·y without materializing the transpose.
inline Vector transpose_times(const DenseMatrix& a, std::span<const double> y)
{
    if (a.rows() != y.size())
        throw Error(Errc::ShapeMismatch, "transposed matrix-vector product: size mismatch");
    Vector x(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double yi = y[i];
        if (yi == 0.0)
            continue;
        auto r = a.row(i);
        for (std::size_t j = 0; j < r.size(); ++j)
            x[j] += r[j] * yi;
    }
    return x;
}

/// A·diag(d): scales column j by d[j].
inline DenseMatrix scale_columns(DenseMatrix a, std::span<const double> d)
{
    if (a.cols() != d.size())
        throw Error(Errc::ShapeMismatch, "scale_columns: size mismatch");
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto r = a.row(i);
        for (std::size_t j = 0; j < r.size(); ++j)
            r[j] *= d[j];
    }
    return a;
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

inline double frobenius_norm(const DenseMatrix& a) noexcept { return norm2(a.data()); }

inline double max_abs(const DenseMatrix& a) noexcept
{
    double m = 0.0;
    for (double v : a.data())
        m = std::max(m, std::abs(v));
    return m;
}

} // namespace lplr
