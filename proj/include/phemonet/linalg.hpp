#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace phemonet {

/// Dense row-major matrix of doubles. Column vectors are r x 1 matrices.
///
/// Both dimensions are at least one; data().size() == rows() * cols() always holds.
class Matrix {
public:
    Matrix() : Matrix(1, 1) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    Matrix transposed() const;

    /// Copy of columns [first, first + count).
    Matrix col_block(std::size_t first, std::size_t count) const;
    /// Copy of rows [first, first + count).
    Matrix row_block(std::size_t first, std::size_t count) const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s) noexcept;

    bool operator==(const Matrix& other) const = default;

    std::string shape_string() const;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

/// a * b.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T without forming the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// a^T * b without forming the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

/// Result shape of a Kronecker product; throws SizeError if it is not representable.
std::pair<std::size_t, std::size_t> kronecker_shape(std::size_t a_rows, std::size_t a_cols, std::size_t b_rows,
                                                    std::size_t b_cols);

/// Kronecker product: block (i, j) of the result is a(i, j) * b.
Matrix kronecker(const Matrix& a, const Matrix& b);

/// Frobenius inner product <a, b>.
double frobenius_dot(const Matrix& a, const Matrix& b);

/// Largest absolute element-wise difference.
double max_abs_diff(const Matrix& a, const Matrix& b);

using ScalarFunction = std::function<double(std::span<const double>)>;

inline constexpr double kDefaultGradEps = 1e-5;

/// Central-difference gradient (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every coordinate.
/// Throws NumericError if f returns a non-finite value, ConfigError if eps <= 0.
std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> x,
                                     double eps = kDefaultGradEps);

/// |a - b| / max(|a|, |b|, floor). The floor keeps near-zero gradients from
/// inflating the ratio with finite-difference round-off.
double relative_error(double a, double b, double floor = 1e-6);

/// Maximum relative_error over paired entries; spans must have equal length.
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6);

}  // namespace phemonet
