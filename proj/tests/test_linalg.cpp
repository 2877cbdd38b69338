#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "phemonet/errors.hpp"
#include "phemonet/linalg.hpp"
#include "phemonet/rng.hpp"

using phemonet::Matrix;

TEST_CASE("matmul: identity and column selection") {
    const Matrix a{{1, 2}, {3, 4}};
    CHECK(phemonet::matmul(Matrix::identity(2), a) == a);
    CHECK(phemonet::matmul(a, Matrix{{0}, {1}}) == Matrix{{2}, {4}});
}

TEST_CASE("matmul agrees with the triple loop") {
    phemonet::Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a = oracle::random_matrix(5, 4, rng);
        const Matrix b = oracle::random_matrix(4, 3, rng);
        CHECK(phemonet::max_abs_diff(phemonet::matmul(a, b), oracle::naive_matmul(a, b)) < 1e-12);
        const Matrix c = oracle::random_matrix(3, 4, rng);
        CHECK(phemonet::max_abs_diff(phemonet::matmul_nt(a, c), oracle::naive_matmul(a, oracle::transpose(c))) < 1e-12);
        const Matrix d = oracle::random_matrix(5, 2, rng);
        CHECK(phemonet::max_abs_diff(phemonet::matmul_tn(a, d), oracle::naive_matmul(oracle::transpose(a), d)) < 1e-12);
    }
}

TEST_CASE("matmul shape mismatch names both shapes") {
    try {
        phemonet::matmul(Matrix(2, 3), Matrix(2, 3));
        FAIL("expected ShapeError");
    } catch (const phemonet::ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);
    }
}

TEST_CASE("matrix dimensions must be positive") {
    CHECK_THROWS_AS(Matrix(0, 3), phemonet::ShapeError);
    CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>(3)), phemonet::ShapeError);
}

TEST_CASE("kronecker: identity and permutation structure") {
    const Matrix b{{1, 2, 3}, {4, 5, 6}};
    const Matrix id = phemonet::kronecker(Matrix::identity(2), b);
    const Matrix swap = phemonet::kronecker(Matrix{{0, 1}, {1, 0}}, b);
    REQUIRE(id.rows() == 4);
    REQUIRE(id.cols() == 6);
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(id(r, c) == b(r, c));
            CHECK(id(r + 2, c + 3) == b(r, c));
            CHECK(id(r, c + 3) == 0.0);
            CHECK(id(r + 2, c) == 0.0);
            CHECK(swap(r, c + 3) == b(r, c));
            CHECK(swap(r + 2, c) == b(r, c));
            CHECK(swap(r, c) == 0.0);
            CHECK(swap(r + 2, c + 3) == 0.0);
        }
}

TEST_CASE("kronecker matches the element-wise definition") {
    const Matrix a{{1, 2}, {3, 4}};
    const Matrix b{{0, 5}, {6, 7}};
    const Matrix expected{{0, 5, 0, 10}, {6, 7, 12, 14}, {0, 15, 0, 20}, {18, 21, 24, 28}};
    CHECK(phemonet::kronecker(a, b) == expected);
    CHECK(oracle::naive_kronecker(a, b) == expected);

    phemonet::Rng rng(3);
    const Matrix x = oracle::random_matrix(3, 2, rng);
    const Matrix y = oracle::random_matrix(2, 5, rng);
    CHECK(phemonet::kronecker(x, y) == oracle::naive_kronecker(x, y));
}

TEST_CASE("kronecker overflow is a size error") {
    const std::size_t big = std::size_t{1} << 33;
    CHECK_THROWS_AS(phemonet::kronecker_shape(big, 1, big, 1), phemonet::SizeError);
    CHECK_THROWS_AS(phemonet::kronecker_shape(big, big, 2, 2), phemonet::SizeError);
    CHECK(phemonet::kronecker_shape(3, 2, 4, 5) == std::pair<std::size_t, std::size_t>{12, 10});
}

TEST_CASE("kronecker properties") {
    phemonet::Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a1 = oracle::random_matrix(2, 3, rng);
        const Matrix a2 = oracle::random_matrix(2, 3, rng);
        const Matrix b = oracle::random_matrix(3, 2, rng);
        CHECK(phemonet::max_abs_diff(phemonet::kronecker(a1 + a2, b),
                                     phemonet::kronecker(a1, b) + phemonet::kronecker(a2, b)) < 1e-12);

        const Matrix c = oracle::random_matrix(3, 2, rng);
        const Matrix d = oracle::random_matrix(2, 4, rng);
        const Matrix lhs = phemonet::matmul(phemonet::kronecker(a1, b), phemonet::kronecker(c, d));
        const Matrix rhs = phemonet::kronecker(phemonet::matmul(a1, c), phemonet::matmul(b, d));
        CHECK(phemonet::max_abs_diff(lhs, rhs) < 1e-10);

        const Matrix diag = phemonet::kronecker(Matrix::identity(3), b);
        Matrix expected(9, 6);
        for (std::size_t k = 0; k < 3; ++k)
            for (std::size_t r = 0; r < 3; ++r)
                for (std::size_t s = 0; s < 2; ++s) expected(k * 3 + r, k * 2 + s) = b(r, s);
        CHECK(diag == expected);
    }
}

TEST_CASE("finite_diff_grad on simple functions") {
    const std::vector<double> three{3.0};
    const auto g = phemonet::finite_diff_grad([](std::span<const double> x) { return x[0] * x[0]; }, three, 1e-5);
    CHECK(std::abs(g[0] - 6.0) < 1e-8);

    const std::vector<double> pt{1.0, -2.0, 0.5};
    const auto zero = phemonet::finite_diff_grad([](std::span<const double>) { return 4.2; }, pt);
    for (double v : zero) CHECK(v == 0.0);
}

TEST_CASE("finite_diff_grad matches polynomial derivatives") {
    phemonet::Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(4);
        for (double& v : x) v = rng.uniform(-2.0, 2.0);
        // f = sum_i c_i x_i^3 + x_0 x_1 - x_2^2 x_3
        const double c[4] = {0.5, -1.0, 2.0, 0.25};
        auto f = [&](std::span<const double> p) {
            double s = p[0] * p[1] - p[2] * p[2] * p[3];
            for (int i = 0; i < 4; ++i) s += c[i] * p[i] * p[i] * p[i];
            return s;
        };
        const std::vector<double> analytic{3 * c[0] * x[0] * x[0] + x[1], 3 * c[1] * x[1] * x[1] + x[0],
                                           3 * c[2] * x[2] * x[2] - 2 * x[2] * x[3], 3 * c[3] * x[3] * x[3] - x[2] * x[2]};
        CHECK(phemonet::max_relative_error(phemonet::finite_diff_grad(f, x), analytic) < 1e-6);
    }
}

TEST_CASE("finite_diff_grad rejects non-finite values and bad eps") {
    const std::vector<double> x{1.0};
    CHECK_THROWS_AS(phemonet::finite_diff_grad([](std::span<const double>) { return NAN; }, x), phemonet::NumericError);
    CHECK_THROWS_AS(phemonet::finite_diff_grad([](std::span<const double>) { return 1.0; }, x, 0.0),
                    phemonet::ConfigError);
}

TEST_CASE("relative error") {
    CHECK(phemonet::relative_error(1.0, 1.0) == 0.0);
    CHECK(phemonet::relative_error(2.0, 1.0) == doctest::Approx(0.5));
    CHECK(phemonet::relative_error(0.0, 1e-9, 1e-6) == doctest::Approx(1e-3));
}
