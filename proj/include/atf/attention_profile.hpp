// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <span>
#include <vector>

#include "atf/image.hpp"
#include "atf/mask.hpp"
#include "atf/vit.hpp"

namespace atf {

// Per-token attention received in the first encoder layer for one image.
struct AttentionSummary {
    Tensor values;      // a_t, sums to 1
    double mean = 0.0;  // average of values, equal to 1/T up to rounding
};

// Fraction of images in which each token is above its image's average attention.
struct AttentionRateMap {
    std::vector<double> rates;
    std::size_t sample_count = 0;
    // Integer numerators behind `rates`, kept so merges stay exact.
    std::vector<std::size_t> counts;
};

// Attention each token receives in layer 1 of the full, unfiltered token set:
// per head softmax(Q Kᵀ/√dk) over the normalized tokens, mean over query rows
// for every key column, then averaged over heads.
inline AttentionSummary attention_values(const TokenSet& tokens, const ModelWeights& weights,
                                         const VitConfig& config) {
    tokens.validate();
    if (weights.layers.empty()) {
        throw PreconditionError("attention_values: model has no encoder layers");
    }
    const LayerWeights& first = weights.layers.front();
    const std::size_t T = tokens.size();
    const std::size_t dk = config.head_dim();
    const Tensor normed = numerics::layer_norm(tokens.tokens, first.attn_norm.gamma, first.attn_norm.beta,
                                               config.layer_norm_eps);
    const Tensor q = numerics::linear(normed, first.query.weight, first.query.bias);
    const Tensor k = numerics::linear(normed, first.key.weight, first.key.bias);

    std::vector<double> head_sum(T, 0.0);
    std::vector<double> column(T);
    for (std::size_t h = 0; h < config.heads; ++h) {
        std::fill(column.begin(), column.end(), 0.0);
        attention::for_each_probability_row(attention::head_slice(q, h, dk), attention::head_slice(k, h, dk),
                                            [&](std::size_t, std::span<const double> probs) {
                                                for (std::size_t j = 0; j < T; ++j) {
                                                    column[j] += probs[j];
                                                }
                                            });
        for (std::size_t j = 0; j < T; ++j) {
            head_sum[j] += column[j] / static_cast<double>(T);
        }
    }

    AttentionSummary summary{Tensor({T}), 0.0};
    double total = 0.0;
    for (std::size_t j = 0; j < T; ++j) {
        summary.values[j] = static_cast<float>(head_sum[j] / static_cast<double>(config.heads));
        total += summary.values[j];
    }
    summary.mean = total / static_cast<double>(T);
    return summary;
}

inline AttentionSummary attention_values(const ImageU8& image, const ModelWeights& weights, const VitConfig& config) {
    return attention_values(tokenize(image, weights, config), weights, config);
}

// Tokens strictly above the image's average attention.
inline MaskVector high_attention_mask(const AttentionSummary& summary) {
    MaskVector mask(summary.values.size());
    for (std::size_t t = 0; t < summary.values.size(); ++t) {
        mask.set(t, static_cast<double>(summary.values[t]) > summary.mean);
    }
    return mask;
}

inline AttentionRateMap rates_from_masks(std::span<const MaskVector> masks) {
    if (masks.empty()) {
        throw PreconditionError("attention_rate: needs at least one image");
    }
    const std::size_t T = masks.front().size();
    AttentionRateMap map{std::vector<double>(T, 0.0), masks.size(), std::vector<std::size_t>(T, 0)};
    for (const auto& m : masks) {
        if (m.size() != T) {
            throw ShapeError("attention_rate: masks of different lengths");
        }
        for (std::size_t t = 0; t < T; ++t) {
            map.counts[t] += m[t] ? 1 : 0;
        }
    }
    for (std::size_t t = 0; t < T; ++t) {
        map.rates[t] = static_cast<double>(map.counts[t]) / static_cast<double>(masks.size());
    }
    return map;
}

inline AttentionRateMap attention_rate(std::span<const ImageU8> images, const ModelWeights& weights,
                                       const VitConfig& config) {
    if (images.empty()) {
        throw PreconditionError("attention_rate: needs at least one image");
    }
    std::vector<MaskVector> masks;
    masks.reserve(images.size());
    for (const auto& image : images) {
        masks.push_back(high_attention_mask(attention_values(image, weights, config)));
    }
    return rates_from_masks(masks);
}

// Grayscale h×w heat map, pixel = round(rate · 255).
inline ImageU8 heatmap_image(const AttentionRateMap& map, GridSize grid) {
    if (grid.count() != map.rates.size()) {
        throw ShapeError("heatmap: grid " + std::to_string(grid.height) + "x" + std::to_string(grid.width) +
                         " does not hold " + std::to_string(map.rates.size()) + " rates");
    }
    ImageU8 img(grid.width, grid.height, 1);
    for (std::size_t t = 0; t < map.rates.size(); ++t) {
        const double r = std::clamp(map.rates[t], 0.0, 1.0);
        img.pixels[t] = static_cast<std::uint8_t>(std::lround(r * 255.0));
    }
    return img;
}

inline void export_heatmap(const AttentionRateMap& map, GridSize grid, const std::filesystem::path& path) {
    write_netpbm(path, heatmap_image(map, grid));
}

}  // namespace atf
