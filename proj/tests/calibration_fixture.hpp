// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Hand-built model in which a chosen token subset receives boosted layer-1
// attention, for checking static-region calibration against a known answer.

#include <random>
#include <vector>

#include "atf/atf.hpp"
#include "reference.hpp"
#include "test_util.hpp"

namespace atf::testing {

struct BoostedInstance {
    VitConfig config;
    ModelWeights weights;
    std::vector<ImageU8> samples;
    MaskVector chosen;
};

// Grid side×side of 4px patches, d = 8, two heads. Positional embeddings are
// (1,1,1,1,-1,-1,-1,-1) for chosen tokens and (1,-1,1,-1,1,-1,1,-1) for the
// rest; both are already layer-normalized. Every query is the constant
// 3·(1,1,1,1,-1,-1,-1,-1) and keys are the normalized tokens, so chosen keys
// score 6 per head and the others 0. `perturb` scales a random patch
// projection that makes tokens depend slightly on the image.
inline BoostedInstance boosted_instance(std::size_t side, MaskVector chosen, std::size_t samples,
                                        std::uint64_t seed = 0, double perturb = 0.01) {
    BoostedInstance inst;
    inst.config = tiny_config(side * 4, 4, 1, 8, 2, 1);
    inst.weights = zero_weights(inst.config);
    inst.chosen = std::move(chosen);
    std::mt19937_64 rng(seed);
    const float boosted[8] = {1, 1, 1, 1, -1, -1, -1, -1};
    const float plain[8] = {1, -1, 1, -1, 1, -1, 1, -1};
    for (std::size_t t = 0; t < inst.config.tokens(); ++t) {
        const float* src = inst.chosen[t] ? boosted : plain;
        std::copy(src, src + 8, inst.weights.positional_embeddings.row(t).begin());
    }
    for (float& v : inst.weights.patch_projection.weight.data()) v = uniform_symmetric(rng, perturb);
    auto& layer = inst.weights.layers[0];
    for (std::size_t i = 0; i < 8; ++i) {
        layer.query.bias[i] = 3.0f * boosted[i];
        layer.key.weight.at(i, i) = 1.0f;
    }
    for (std::size_t i = 0; i < samples; ++i) inst.samples.push_back(random_image(rng, inst.config.image_size, 1));
    return inst;
}

// Static-region rule evaluated directly in double from the reference model.
inline MaskVector static_mask_oracle(const BoostedInstance& inst) {
    const std::size_t T = inst.config.tokens();
    std::vector<double> per_token(T, 0.0);
    double grand = 0.0;
    for (const auto& img : inst.samples) {
        const auto a = reference::attention_values(reference::tokenize(img, inst.weights, inst.config), inst.weights,
                                                   inst.config);
        for (std::size_t t = 0; t < T; ++t) {
            per_token[t] += a[t];
            grand += a[t];
        }
    }
    const double n = static_cast<double>(inst.samples.size());
    MaskVector m(T);
    for (std::size_t t = 0; t < T; ++t) m.set(t, per_token[t] / n > grand / (static_cast<double>(T) * n));
    return m;
}

}  // namespace atf::testing
