// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "atf/config.hpp"
#include "atf/image.hpp"
#include "atf/model.hpp"
#include "atf/numerics.hpp"
#include "atf/tensor.hpp"

namespace atf {

// Tokens entering the encoder together with the grid they came from.
// kept_indices[r] is the original (row-major) patch index of tokens row r.
// The pipeline keeps them ascending; the encoder only needs them distinct, as
// full attention does not look at order.
struct TokenSet {
    Tensor tokens;  // [T' × d]
    GridSize grid;
    std::vector<std::size_t> kept_indices;

    std::size_t size() const { return kept_indices.size(); }
    std::size_t full_count() const { return grid.count(); }

    void validate() const {
        if (kept_indices.empty()) {
            throw EmptyResultError("token set is empty");
        }
        if (tokens.rank() != 2 || tokens.dim(0) != kept_indices.size()) {
            throw ShapeError("token set: " + std::to_string(kept_indices.size()) + " indices for token matrix " +
                             shape_to_string(tokens.shape()));
        }
        std::vector<bool> seen(grid.count(), false);
        for (std::size_t idx : kept_indices) {
            if (idx >= grid.count() || seen[idx]) {
                throw ShapeError("token set: kept indices must be distinct and inside the grid");
            }
            seen[idx] = true;
        }
    }

    // Rows in original patch order, as produced by tokenize and filter_tokens.
    bool ascending() const { return std::is_sorted(kept_indices.begin(), kept_indices.end()); }
};

struct EmbeddingVector {
    Tensor values;  // [d]
};

inline void check_image(const ImageU8& image, const VitConfig& config) {
    if (image.width != config.image_size || image.height != config.image_size ||
        image.channels != config.channels) {
        throw ShapeError("image is " + std::to_string(image.width) + "x" + std::to_string(image.height) + "x" +
                         std::to_string(image.channels) + ", model expects " + std::to_string(config.image_size) +
                         "x" + std::to_string(config.image_size) + "x" + std::to_string(config.channels));
    }
}

// Flattened pixels of patch t in (row, column, channel) order, scaled to [0, 1].
inline std::vector<float> patch_pixels(const ImageU8& image, const VitConfig& config, std::size_t t) {
    const std::size_t side = config.grid_side();
    const std::size_t P = config.patch_size;
    const std::size_t y0 = (t / side) * P;
    const std::size_t x0 = (t % side) * P;
    std::vector<float> flat;
    flat.reserve(config.patch_dim());
    for (std::size_t y = 0; y < P; ++y) {
        for (std::size_t x = 0; x < P; ++x) {
            for (std::size_t ch = 0; ch < config.channels; ++ch) {
                flat.push_back(static_cast<float>(image.at(y0 + y, x0 + x, ch)) / 255.0f);
            }
        }
    }
    return flat;
}

// token_t = W·patch_t + b + pos_t, patches enumerated row-major.
inline TokenSet tokenize(const ImageU8& image, const ModelWeights& weights, const VitConfig& config) {
    check_image(image, config);
    const std::size_t T = config.tokens();
    const std::size_t d = config.d_model;
    const auto& proj = weights.patch_projection;
    TokenSet set{Tensor({T, d}), config.grid(), std::vector<std::size_t>(T)};
    std::iota(set.kept_indices.begin(), set.kept_indices.end(), std::size_t{0});
    for (std::size_t t = 0; t < T; ++t) {
        const std::vector<float> flat = patch_pixels(image, config, t);
        auto out = set.tokens.row(t);
        const auto pos = weights.positional_embeddings.row(t);
        for (std::size_t o = 0; o < d; ++o) {
            const double acc = numerics::dot(flat, proj.weight.row(o));
            out[o] = static_cast<float>(acc + static_cast<double>(proj.bias[o]) + static_cast<double>(pos[o]));
        }
    }
    return set;
}

namespace attention {

// Columns [head·dk, (head+1)·dk) of a [T × d] projection, as a contiguous [T × dk] matrix.
inline Tensor head_slice(const Tensor& projected, std::size_t head, std::size_t dk) {
    const std::size_t rows = projected.dim(0);
    Tensor out({rows, dk});
    for (std::size_t r = 0; r < rows; ++r) {
        const auto src = projected.row(r).subspan(head * dk, dk);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

// Calls fn(i, probs) for every query row i with probs = softmax(q_i·Kᵀ/√dk).
// One row is materialized at a time, so memory stays O(T).
template <typename Fn>
void for_each_probability_row(const Tensor& q, const Tensor& k, Fn&& fn) {
    const std::size_t rows = q.dim(0);
    const std::size_t keys = k.dim(0);
    const double scale = std::sqrt(static_cast<double>(q.dim(1)));
    std::vector<double> probs(keys);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto qi = q.row(i);
        for (std::size_t j = 0; j < keys; ++j) {
            probs[j] = numerics::dot(qi, k.row(j)) / scale;
        }
        numerics::softmax_inplace(probs);
        fn(i, std::span<const double>(probs));
    }
}

// Query/key/value projections of the normalized tokens.
struct Projections {
    Tensor q;
    Tensor k;
    Tensor v;
};

inline Projections project(const Tensor& normed, const LayerWeights& layer) {
    return {numerics::linear(normed, layer.query.weight, layer.query.bias),
            numerics::linear(normed, layer.key.weight, layer.key.bias),
            numerics::linear(normed, layer.value.weight, layer.value.bias)};
}

// Unmasked multi-head attention, heads concatenated before the output projection.
inline Tensor multi_head(const Projections& p, std::size_t heads) {
    const std::size_t rows = p.q.dim(0);
    const std::size_t d = p.q.dim(1);
    const std::size_t dk = d / heads;
    Tensor out({rows, d});
    std::vector<double> acc(dk);
    for (std::size_t h = 0; h < heads; ++h) {
        const Tensor qh = head_slice(p.q, h, dk);
        const Tensor kh = head_slice(p.k, h, dk);
        const Tensor vh = head_slice(p.v, h, dk);
        for_each_probability_row(qh, kh, [&](std::size_t i, std::span<const double> probs) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t j = 0; j < probs.size(); ++j) {
                const double pj = probs[j];
                const auto vj = vh.row(j);
                for (std::size_t c = 0; c < dk; ++c) {
                    acc[c] += pj * vj[c];
                }
            }
            auto dst = out.row(i).subspan(h * dk, dk);
            for (std::size_t c = 0; c < dk; ++c) {
                dst[c] = static_cast<float>(acc[c]);
            }
        });
    }
    return out;
}

}  // namespace attention

inline void add_inplace(Tensor& x, const Tensor& delta) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = x[i] + delta[i];
    }
}

// Pre-norm block: x + MHA(LN(x)), then x + MLP(LN(x)).
inline TokenSet encoder_layer(const TokenSet& tokens, const LayerWeights& layer, const VitConfig& config) {
    tokens.validate();
    if (tokens.tokens.dim(1) != config.d_model) {
        throw ShapeError("encoder_layer: token width " + std::to_string(tokens.tokens.dim(1)) +
                         " does not match d_model " + std::to_string(config.d_model));
    }
    TokenSet out = tokens;
    Tensor& x = out.tokens;

    const Tensor normed = numerics::layer_norm(x, layer.attn_norm.gamma, layer.attn_norm.beta, config.layer_norm_eps);
    const Tensor mixed = attention::multi_head(attention::project(normed, layer), config.heads);
    add_inplace(x, numerics::linear(mixed, layer.out.weight, layer.out.bias));

    const Tensor normed2 = numerics::layer_norm(x, layer.mlp_norm.gamma, layer.mlp_norm.beta, config.layer_norm_eps);
    const Tensor hidden = numerics::gelu(numerics::linear(normed2, layer.fc1.weight, layer.fc1.bias));
    add_inplace(x, numerics::linear(hidden, layer.fc2.weight, layer.fc2.bias));
    return out;
}

// Mean pooling, or a single learned probe attending over the tokens. Both are
// invariant to token order.
inline EmbeddingVector pool(const Tensor& tokens, PoolingMode mode, const PoolWeights& params) {
    numerics::require_matrix(tokens, "pool");
    const std::size_t rows = tokens.dim(0);
    const std::size_t d = tokens.dim(1);
    std::vector<double> acc(d, 0.0);
    if (mode == PoolingMode::mean) {
        for (std::size_t r = 0; r < rows; ++r) {
            const auto row = tokens.row(r);
            for (std::size_t c = 0; c < d; ++c) {
                acc[c] += row[c];
            }
        }
        for (double& v : acc) {
            v /= static_cast<double>(rows);
        }
    } else {
        if (params.probe.size() != d) {
            throw ShapeError("pool: probe length does not match token width");
        }
        const Tensor keys = numerics::linear(tokens, params.key.weight, params.key.bias);
        const Tensor values = numerics::linear(tokens, params.value.weight, params.value.bias);
        std::vector<double> scores(rows);
        const double scale = std::sqrt(static_cast<double>(d));
        for (std::size_t r = 0; r < rows; ++r) {
            scores[r] = numerics::dot(params.probe.data(), keys.row(r)) / scale;
        }
        numerics::softmax_inplace(scores);
        for (std::size_t r = 0; r < rows; ++r) {
            const auto vr = values.row(r);
            for (std::size_t c = 0; c < d; ++c) {
                acc[c] += scores[r] * vr[c];
            }
        }
    }
    std::vector<float> result(acc.begin(), acc.end());
    return {Tensor::vector(std::move(result))};
}

// Encoder layers, optional final norm, then pooling.
inline EmbeddingVector encode(const TokenSet& tokens, const ModelWeights& weights, const VitConfig& config) {
    tokens.validate();
    if (weights.layers.size() != config.layers) {
        throw ShapeError("encode: weights carry " + std::to_string(weights.layers.size()) + " layers, config " +
                         std::to_string(config.layers));
    }
    TokenSet x = tokens;
    for (const auto& layer : weights.layers) {
        x = encoder_layer(x, layer, config);
    }
    Tensor h = config.final_norm
                   ? numerics::layer_norm(x.tokens, weights.final_norm.gamma, weights.final_norm.beta,
                                          config.layer_norm_eps)
                   : std::move(x.tokens);
    return pool(h, config.pooling, weights.pool);
}

}  // namespace atf
