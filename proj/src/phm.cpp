#include "phemonet/phm.hpp"

#include <cmath>
#include <string>

#include "phemonet/errors.hpp"
#include "phemonet/rng.hpp"

namespace phemonet::phm {

namespace {

// Rearranges a batch x (B x n*w) into the (n*B) x w matrix whose row block k holds
// column block k of x.
Matrix stack_column_blocks(const Matrix& x, std::size_t n) {
    const std::size_t batch = x.rows();
    const std::size_t w = x.cols() / n;
    Matrix out(n * batch, w);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t b = 0; b < batch; ++b) {
            auto src = x.row(b).subspan(k * w, w);
            std::copy(src.begin(), src.end(), out.row(k * batch + b).begin());
        }
    return out;
}

// mixed row block j = sum_k coeff(j, k) * stacked row block k, for stacked (n*B) x w.
// With transpose_coeff the roles of j and k in coeff are swapped.
Matrix mix_row_blocks(const Matrix& stacked, const Matrix& coeff, std::size_t batch, bool transpose_coeff) {
    const std::size_t n = coeff.rows();
    const std::size_t w = stacked.cols();
    Matrix out(stacked.rows(), w);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            const double c = transpose_coeff ? coeff(k, j) : coeff(j, k);
            if (c == 0.0) continue;
            for (std::size_t b = 0; b < batch; ++b) {
                auto dst = out.row(j * batch + b);
                auto src = stacked.row(k * batch + b);
                for (std::size_t t = 0; t < w; ++t) dst[t] += c * src[t];
            }
        }
    return out;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError("PhmLayer: " + msg);
}

}  // namespace

void validate(const PhmLayer& layer) {
    require(layer.n >= 1, "n must be positive");
    require(layer.d_in % layer.n == 0 && layer.d_out % layer.n == 0,
            "n=" + std::to_string(layer.n) + " must divide d_in=" + std::to_string(layer.d_in) +
                " and d_out=" + std::to_string(layer.d_out));
    require(layer.A.size() == layer.n, "expected " + std::to_string(layer.n) + " algebra matrices");
    require(layer.F.size() == layer.n, "expected " + std::to_string(layer.n) + " weight blocks");
    for (const auto& a : layer.A) require(a.rows() == layer.n && a.cols() == layer.n, "algebra matrix is " + a.shape_string());
    for (const auto& f : layer.F)
        require(f.rows() == layer.block_out() && f.cols() == layer.block_in(), "weight block is " + f.shape_string());
    require(layer.b.size() == layer.d_out, "bias length " + std::to_string(layer.b.size()));
}

Matrix build_weight(const PhmLayer& layer) {
    validate(layer);
    Matrix w = kronecker(layer.A[0], layer.F[0]);
    for (std::size_t i = 1; i < layer.n; ++i) w += kronecker(layer.A[i], layer.F[i]);
    return w;
}

Matrix forward(const PhmLayer& layer, const Matrix& x) {
    validate(layer);
    if (x.cols() != layer.d_in) {
        throw ShapeError("PhmLayer forward: input " + x.shape_string() + " but d_in=" + std::to_string(layer.d_in));
    }
    const std::size_t n = layer.n;
    const std::size_t batch = x.rows();
    const std::size_t p = layer.block_out();
    const Matrix xs = stack_column_blocks(x, n);

    Matrix y(batch, layer.d_out);
    for (std::size_t b = 0; b < batch; ++b) std::copy(layer.b.begin(), layer.b.end(), y.row(b).begin());

    for (std::size_t i = 0; i < n; ++i) {
        // Row block k of proj is x_k F_i^T.
        const Matrix proj = matmul_nt(xs, layer.F[i]);
        const Matrix& a = layer.A[i];
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                const double c = a(j, k);
                if (c == 0.0) continue;
                for (std::size_t b = 0; b < batch; ++b) {
                    auto dst = y.row(b).subspan(j * p, p);
                    auto src = proj.row(k * batch + b);
                    for (std::size_t t = 0; t < p; ++t) dst[t] += c * src[t];
                }
            }
    }
    return y;
}

PhmGradients backward(const PhmLayer& layer, const Matrix& x, const Matrix& upstream, bool compute_dx) {
    validate(layer);
    if (x.cols() != layer.d_in || upstream.cols() != layer.d_out || x.rows() != upstream.rows()) {
        throw ShapeError("PhmLayer backward: input " + x.shape_string() + ", upstream " + upstream.shape_string() +
                         " for layer " + std::to_string(layer.d_in) + "->" + std::to_string(layer.d_out));
    }
    const std::size_t n = layer.n;
    const std::size_t batch = x.rows();
    const std::size_t m = layer.block_in();
    const std::size_t p = layer.block_out();

    const Matrix xs = stack_column_blocks(x, n);
    const Matrix us = stack_column_blocks(upstream, n);

    PhmGradients g{.dA = {}, .dF = {}, .db = std::vector<double>(layer.d_out, 0.0), .dx = Matrix(batch, layer.d_in)};
    g.dA.reserve(n);
    g.dF.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        const Matrix& a = layer.A[i];

        // dA_i(j, k) = <G^(jk), F_i> = <U_j, x_k F_i^T>
        const Matrix proj = matmul_nt(xs, layer.F[i]);
        Matrix da(n, n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                double acc = 0.0;
                for (std::size_t b = 0; b < batch; ++b) {
                    auto u = us.row(j * batch + b);
                    auto v = proj.row(k * batch + b);
                    for (std::size_t t = 0; t < p; ++t) acc += u[t] * v[t];
                }
                da(j, k) = acc;
            }
        g.dA.push_back(std::move(da));

        // dF_i = sum_jk A_i(j, k) G^(jk) = sum_j U_j^T (sum_k A_i(j, k) x_k)
        g.dF.push_back(matmul_tn(us, mix_row_blocks(xs, a, batch, false)));

        if (!compute_dx) continue;
        // dx_k += (sum_j A_i(j, k) U_j) F_i
        const Matrix dxs = matmul(mix_row_blocks(us, a, batch, true), layer.F[i]);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t b = 0; b < batch; ++b) {
                auto dst = g.dx.row(b).subspan(k * m, m);
                auto src = dxs.row(k * batch + b);
                for (std::size_t t = 0; t < m; ++t) dst[t] += src[t];
            }
    }

    for (std::size_t b = 0; b < batch; ++b) {
        auto u = upstream.row(b);
        for (std::size_t c = 0; c < layer.d_out; ++c) g.db[c] += u[c];
    }
    return g;
}

std::size_t param_count(std::size_t n, std::size_t d_in, std::size_t d_out) {
    if (n == 0 || d_in % n != 0 || d_out % n != 0) {
        throw ConfigError("param_count: n=" + std::to_string(n) + " must divide d_in=" + std::to_string(d_in) +
                          " and d_out=" + std::to_string(d_out));
    }
    return n * (d_in / n) * (d_out / n) + n * n * n + d_out;
}

std::size_t element_count(const PhmLayer& layer) {
    std::size_t total = layer.b.size();
    for (const auto& a : layer.A) total += a.size();
    for (const auto& f : layer.F) total += f.size();
    return total;
}

PhmLayer init(std::size_t n, std::size_t d_in, std::size_t d_out, std::uint64_t seed, std::string_view scheme) {
    if (scheme != kGlorotBlockScheme) {
        throw ConfigError("unknown PHM initialization scheme '" + std::string(scheme) + "'");
    }
    param_count(n, d_in, d_out);  // divisibility check

    PhmLayer layer{.n = n, .d_in = d_in, .d_out = d_out, .A = {}, .F = {}, .b = std::vector<double>(d_out, 0.0)};
    Rng rng(seed);
    const double a_std = std::sqrt(1.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        Matrix a(n, n);
        for (double& v : a.data()) v = rng.normal(0.0, a_std);
        layer.A.push_back(std::move(a));
    }
    const double s = std::sqrt(6.0 / static_cast<double>(layer.block_in() + layer.block_out()));
    for (std::size_t i = 0; i < n; ++i) {
        Matrix f(layer.block_out(), layer.block_in());
        for (double& v : f.data()) v = rng.uniform(-s, s);
        layer.F.push_back(std::move(f));
    }
    return layer;
}

}  // namespace phemonet::phm
