#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "phemonet/linalg.hpp"

namespace phemonet::phm {

/// Parameterized hypercomplex affine layer.
///
/// The weight is the Kronecker sum W = sum_i A[i] (x) F[i] with n algebra matrices A[i] (n x n)
/// and n weight blocks F[i] ((d_out/n) x (d_in/n)). Inputs are batch-major: each row x_r maps
/// to W x_r + b.
struct PhmLayer {
    std::size_t n = 1;
    std::size_t d_in = 1;
    std::size_t d_out = 1;
    std::vector<Matrix> A;
    std::vector<Matrix> F;
    std::vector<double> b;

    std::size_t block_in() const noexcept { return d_in / n; }
    std::size_t block_out() const noexcept { return d_out / n; }
};

struct PhmGradients {
    std::vector<Matrix> dA;
    std::vector<Matrix> dF;
    std::vector<double> db;
    Matrix dx;
};

/// Throws ShapeError if the layer's blocks do not match (n, d_in, d_out).
void validate(const PhmLayer& layer);

/// Materializes W = sum_i A[i] (x) F[i], shape d_out x d_in.
Matrix build_weight(const PhmLayer& layer);

/// y = x W^T + b, computed block-wise without materializing W.
Matrix forward(const PhmLayer& layer, const Matrix& x);

/// Gradients of <upstream, forward(layer, x)> with respect to A, F, b and x.
/// With compute_dx false the input gradient is left zero.
PhmGradients backward(const PhmLayer& layer, const Matrix& x, const Matrix& upstream, bool compute_dx = true);

/// Element count of a layer: n * (d_in/n) * (d_out/n) + n^3 + d_out.
/// Throws ConfigError unless n divides both widths.
std::size_t param_count(std::size_t n, std::size_t d_in, std::size_t d_out);

/// Element count of an existing layer (sums the stored blocks).
std::size_t element_count(const PhmLayer& layer);

inline constexpr std::string_view kGlorotBlockScheme = "glorot_block";

/// Deterministic initialization. "glorot_block": F ~ U(-s, s) with s = sqrt(6 / (d_in/n + d_out/n)),
/// A ~ N(0, 1/n), b = 0. Unknown scheme names raise ConfigError.
PhmLayer init(std::size_t n, std::size_t d_in, std::size_t d_out, std::uint64_t seed,
              std::string_view scheme = kGlorotBlockScheme);

}  // namespace phemonet::phm
