#pragma once

// Independent reference implementations used only by the tests. They share no code
// with the library beyond the Matrix container.

#include <cmath>
#include <cstddef>

#include "phemonet/linalg.hpp"
#include "phemonet/phm.hpp"
#include "phemonet/rng.hpp"

namespace oracle {

using phemonet::Matrix;

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline Matrix naive_kronecker(const Matrix& a, const Matrix& b) {
    const std::size_t p = b.rows(), q = b.cols();
    Matrix k(a.rows() * p, a.cols() * q);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            for (std::size_t r = 0; r < p; ++r)
                for (std::size_t s = 0; s < q; ++s) k(i * p + r, j * q + s) = a(i, j) * b(r, s);
    return k;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// Materialize W = sum A_i (x) F_i element by element, then y = x W^T + b.
inline Matrix phm_forward(const phemonet::phm::PhmLayer& layer, const Matrix& x) {
    Matrix w(layer.d_out, layer.d_in);
    for (std::size_t i = 0; i < layer.n; ++i) w += naive_kronecker(layer.A[i], layer.F[i]);
    Matrix y = naive_matmul(x, transpose(w));
    for (std::size_t r = 0; r < y.rows(); ++r)
        for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += layer.b[c];
    return y;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, phemonet::Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.normal(0.0, scale);
    return m;
}

/// Gain of a unit-amplitude sine after filtering, measured by projecting the steady-state
/// middle half of the output onto the quadrature pair at that frequency.
template <typename Filter>
double sine_gain(Filter&& filter, double freq, double rate, double seconds) {
    const std::size_t n = static_cast<std::size_t>(rate * seconds);
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = std::sin(2.0 * M_PI * freq * static_cast<double>(t) / rate);
    const std::vector<double> y = filter(x, rate);
    const std::size_t lo = y.size() / 4, hi = 3 * y.size() / 4;
    const double out_rate = rate * static_cast<double>(y.size()) / static_cast<double>(n);
    double c = 0.0, s = 0.0;
    for (std::size_t t = lo; t < hi; ++t) {
        const double ph = 2.0 * M_PI * freq * static_cast<double>(t) / out_rate;
        c += y[t] * std::cos(ph);
        s += y[t] * std::sin(ph);
    }
    return 2.0 * std::hypot(c, s) / static_cast<double>(hi - lo);
}

}  // namespace oracle
