// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "atf/tensor.hpp"

// Dense kernels shared by the encoder, the profiler and the tests. Storage is
// float32; every reduction accumulates in double and rounds once at the end.

namespace atf::numerics {

// Fixed-order four-lane double accumulation. Deterministic for a given input
// length, and independent lanes keep the loop from serializing on one adder.
inline double dot(std::span<const float> a, std::span<const float> b) {
    const std::size_t n = a.size();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        s0 += static_cast<double>(a[k]) * b[k];
        s1 += static_cast<double>(a[k + 1]) * b[k + 1];
        s2 += static_cast<double>(a[k + 2]) * b[k + 2];
        s3 += static_cast<double>(a[k + 3]) * b[k + 3];
    }
    for (; k < n; ++k) {
        s0 += static_cast<double>(a[k]) * b[k];
    }
    return (s0 + s1) + (s2 + s3);
}

inline void require_matrix(const Tensor& t, const char* what) {
    if (t.rank() != 2) {
        throw ShapeError(std::string(what) + ": expected a matrix, got " + shape_to_string(t.shape()));
    }
}

inline Tensor transpose(const Tensor& m) {
    require_matrix(m, "transpose");
    Tensor out({m.dim(1), m.dim(0)});
    for (std::size_t r = 0; r < m.dim(0); ++r) {
        for (std::size_t c = 0; c < m.dim(1); ++c) {
            out.at(c, r) = m.at(r, c);
        }
    }
    return out;
}

// a[m×k] · b[k×n]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    if (a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: inner dimensions disagree, " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
    }
    const Tensor bt = transpose(b);
    Tensor out({a.dim(0), b.dim(1)});
    for (std::size_t i = 0; i < a.dim(0); ++i) {
        for (std::size_t j = 0; j < b.dim(1); ++j) {
            out.at(i, j) = static_cast<float>(dot(a.row(i), bt.row(j)));
        }
    }
    return out;
}

// Affine map y = x · Wᵀ + bias with W stored [out × in], the usual layout of
// a dense layer.
inline Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require_matrix(x, "linear");
    require_matrix(weight, "linear");
    if (x.dim(1) != weight.dim(1) || bias.size() != weight.dim(0)) {
        throw ShapeError("linear: input " + shape_to_string(x.shape()) + ", weight " +
                         shape_to_string(weight.shape()) + ", bias " + shape_to_string(bias.shape()));
    }
    const std::size_t rows = x.dim(0);
    const std::size_t outs = weight.dim(0);
    Tensor y({rows, outs});
    for (std::size_t i = 0; i < rows; ++i) {
        const auto xi = x.row(i);
        auto yi = y.row(i);
        for (std::size_t o = 0; o < outs; ++o) {
            yi[o] = static_cast<float>(dot(xi, weight.row(o)) + static_cast<double>(bias[o]));
        }
    }
    return y;
}

// In-place stable softmax of one row held in double precision.
inline void softmax_inplace(std::span<double> row) {
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
        v = std::exp(v - peak);
        total += v;
    }
    const double inv = 1.0 / total;
    for (double& v : row) {
        v *= inv;
    }
}

inline Tensor softmax_rows(const Tensor& m) {
    require_matrix(m, "softmax_rows");
    Tensor out(m.shape());
    std::vector<double> buf(m.dim(1));
    for (std::size_t r = 0; r < m.dim(0); ++r) {
        const auto in = m.row(r);
        std::copy(in.begin(), in.end(), buf.begin());
        softmax_inplace(buf);
        auto o = out.row(r);
        for (std::size_t c = 0; c < buf.size(); ++c) {
            o[c] = static_cast<float>(buf[c]);
        }
    }
    return out;
}

inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    require_matrix(x, "layer_norm");
    const std::size_t width = x.dim(1);
    if (gamma.size() != width || beta.size() != width) {
        throw ShapeError("layer_norm: parameter length does not match row width " + std::to_string(width));
    }
    if (!(eps > 0.0)) {
        throw PreconditionError("layer_norm: eps must be positive");
    }
    Tensor out(x.shape());
    for (std::size_t r = 0; r < x.dim(0); ++r) {
        const auto in = x.row(r);
        double mean = 0.0;
        for (float v : in) {
            mean += v;
        }
        mean /= static_cast<double>(width);
        double var = 0.0;
        for (float v : in) {
            const double c = v - mean;
            var += c * c;
        }
        var /= static_cast<double>(width);
        const double inv_std = 1.0 / std::sqrt(var + eps);
        auto o = out.row(r);
        for (std::size_t c = 0; c < width; ++c) {
            o[c] = static_cast<float>((in[c] - mean) * inv_std * gamma[c] + beta[c]);
        }
    }
    return out;
}

inline float gelu(float x) {
    const double v = x;
    return static_cast<float>(0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))));
}

inline Tensor gelu(const Tensor& x) {
    Tensor out(x.shape());
    std::transform(x.data().begin(), x.data().end(), out.data().begin(), [](float v) { return gelu(v); });
    return out;
}

inline Tensor identity(std::size_t n) {
    Tensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        out.at(i, i) = 1.0f;
    }
    return out;
}

}  // namespace atf::numerics
