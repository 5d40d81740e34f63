// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Straight-line double-precision reimplementation of the model, used only as
// a test oracle. Shares the weight containers with the library but none of
// its kernels.

#include <cmath>
#include <vector>

#include "atf/config.hpp"
#include "atf/image.hpp"
#include "atf/model.hpp"

namespace atf::reference {

using Matrix = std::vector<std::vector<double>>;

inline Matrix to_matrix(const Tensor& t) {
    Matrix m(t.dim(0), std::vector<double>(t.dim(1)));
    for (std::size_t r = 0; r < t.dim(0); ++r) {
        for (std::size_t c = 0; c < t.dim(1); ++c) {
            m[r][c] = t[r * t.dim(1) + c];
        }
    }
    return m;
}

inline Matrix affine(const Matrix& x, const LinearWeights& l) {
    const std::size_t outs = l.weight.dim(0), ins = l.weight.dim(1);
    Matrix y(x.size(), std::vector<double>(outs));
    for (std::size_t r = 0; r < x.size(); ++r) {
        for (std::size_t o = 0; o < outs; ++o) {
            double s = l.bias[o];
            for (std::size_t i = 0; i < ins; ++i) {
                s += x[r][i] * l.weight[o * ins + i];
            }
            y[r][o] = s;
        }
    }
    return y;
}

inline Matrix norm(const Matrix& x, const NormWeights& n, double eps) {
    Matrix y = x;
    for (auto& row : y) {
        double mean = 0, var = 0;
        for (double v : row) mean += v;
        mean /= row.size();
        for (double v : row) var += (v - mean) * (v - mean);
        var /= row.size();
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = (row[c] - mean) / std::sqrt(var + eps) * n.gamma[c] + n.beta[c];
        }
    }
    return y;
}

// softmax(q_h k_hᵀ / √dk) for one head as a full T×T matrix.
inline Matrix head_probabilities(const Matrix& q, const Matrix& k, std::size_t head, std::size_t dk) {
    const std::size_t T = q.size();
    Matrix p(T, std::vector<double>(T));
    for (std::size_t i = 0; i < T; ++i) {
        double peak = -INFINITY;
        for (std::size_t j = 0; j < T; ++j) {
            double s = 0;
            for (std::size_t c = 0; c < dk; ++c) s += q[i][head * dk + c] * k[j][head * dk + c];
            p[i][j] = s / std::sqrt(static_cast<double>(dk));
            peak = std::max(peak, p[i][j]);
        }
        double z = 0;
        for (double& v : p[i]) z += (v = std::exp(v - peak));
        for (double& v : p[i]) v /= z;
    }
    return p;
}

inline Matrix layer(const Matrix& x, const LayerWeights& w, const VitConfig& c) {
    const std::size_t T = x.size(), d = c.d_model, dk = c.head_dim();
    const Matrix h = norm(x, w.attn_norm, c.layer_norm_eps);
    const Matrix q = affine(h, w.query), k = affine(h, w.key), v = affine(h, w.value);
    Matrix mixed(T, std::vector<double>(d, 0.0));
    for (std::size_t head = 0; head < c.heads; ++head) {
        const Matrix p = head_probabilities(q, k, head, dk);
        for (std::size_t i = 0; i < T; ++i)
            for (std::size_t j = 0; j < T; ++j)
                for (std::size_t cc = 0; cc < dk; ++cc) mixed[i][head * dk + cc] += p[i][j] * v[j][head * dk + cc];
    }
    Matrix y = x;
    const Matrix o = affine(mixed, w.out);
    for (std::size_t i = 0; i < T; ++i)
        for (std::size_t cc = 0; cc < d; ++cc) y[i][cc] += o[i][cc];
    Matrix hidden = affine(norm(y, w.mlp_norm, c.layer_norm_eps), w.fc1);
    for (auto& row : hidden)
        for (double& v2 : row) v2 = 0.5 * v2 * (1.0 + std::erf(v2 / std::sqrt(2.0)));
    const Matrix m = affine(hidden, w.fc2);
    for (std::size_t i = 0; i < T; ++i)
        for (std::size_t cc = 0; cc < d; ++cc) y[i][cc] += m[i][cc];
    return y;
}

inline std::vector<double> pooled(const Matrix& x, const VitConfig& c, const PoolWeights& p) {
    const std::size_t d = c.d_model;
    std::vector<double> out(d, 0.0);
    if (c.pooling == PoolingMode::mean) {
        for (const auto& row : x)
            for (std::size_t i = 0; i < d; ++i) out[i] += row[i] / x.size();
        return out;
    }
    const Matrix k = affine(x, p.key), v = affine(x, p.value);
    std::vector<double> s(x.size());
    double peak = -INFINITY, z = 0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        s[t] = 0;
        for (std::size_t i = 0; i < d; ++i) s[t] += p.probe[i] * k[t][i];
        s[t] /= std::sqrt(static_cast<double>(d));
        peak = std::max(peak, s[t]);
    }
    for (double& v2 : s) z += (v2 = std::exp(v2 - peak));
    for (std::size_t t = 0; t < x.size(); ++t)
        for (std::size_t i = 0; i < d; ++i) out[i] += s[t] / z * v[t][i];
    return out;
}

inline std::vector<double> encode(const Matrix& tokens, const ModelWeights& w, const VitConfig& c) {
    Matrix x = tokens;
    for (const auto& l : w.layers) x = layer(x, l, c);
    if (c.final_norm) x = norm(x, w.final_norm, c.layer_norm_eps);
    return pooled(x, c, w.pool);
}

// Token t = W · patch + b + pos_t with pixel (y, x, ch) of the patch at flat
// position (y·P + x)·C + ch.
inline Matrix tokenize(const ImageU8& img, const ModelWeights& w, const VitConfig& c) {
    const std::size_t P = c.patch_size, side = c.image_size / P, C = c.channels;
    Matrix tokens(side * side, std::vector<double>(c.d_model));
    for (std::size_t t = 0; t < side * side; ++t) {
        for (std::size_t o = 0; o < c.d_model; ++o) {
            double s = w.patch_projection.bias[o] + w.positional_embeddings[t * c.d_model + o];
            for (std::size_t y = 0; y < P; ++y)
                for (std::size_t x = 0; x < P; ++x)
                    for (std::size_t ch = 0; ch < C; ++ch) {
                        const double pix = img.pixels[((t / side * P + y) * c.image_size + t % side * P + x) * C + ch];
                        s += pix / 255.0 * w.patch_projection.weight[o * P * P * C + (y * P + x) * C + ch];
                    }
            tokens[t][o] = s;
        }
    }
    return tokens;
}

// Layer-1 attention received per token, averaged over queries and heads.
inline std::vector<double> attention_values(const Matrix& tokens, const ModelWeights& w, const VitConfig& c) {
    const std::size_t T = tokens.size(), dk = c.head_dim();
    const LayerWeights& l = w.layers.front();
    const Matrix h = norm(tokens, l.attn_norm, c.layer_norm_eps);
    const Matrix q = affine(h, l.query), k = affine(h, l.key);
    std::vector<double> a(T, 0.0);
    for (std::size_t head = 0; head < c.heads; ++head) {
        const Matrix p = head_probabilities(q, k, head, dk);
        for (std::size_t j = 0; j < T; ++j) {
            double col = 0;
            for (std::size_t i = 0; i < T; ++i) col += p[i][j];
            a[j] += col / T / c.heads;
        }
    }
    return a;
}

}  // namespace atf::reference
