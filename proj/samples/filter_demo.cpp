// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal library walk-through: calibrate a static mask on synthetic images,
// then embed one image with and without filtering.

#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "atf/atf.hpp"

int main() {
    atf::VitConfig config;
    config.image_size = 64;
    config.patch_size = 8;
    config.channels = 3;
    config.d_model = 32;
    config.heads = 4;
    config.layers = 2;
    config.mlp_ratio = 4.0;
    config.validate();

    const atf::ModelWeights weights = atf::init_weights(config, 1);
    std::mt19937_64 rng(2);

    std::vector<atf::ImageU8> calibration;
    for (int i = 0; i < 16; ++i) calibration.push_back(atf::synthetic::random_sample(config, rng).image);
    const atf::MaskVector static_mask = atf::static_region_mask(calibration, weights, config);
    std::printf("static mask: %s\n", atf::mask_to_text(static_mask).c_str());

    const atf::synthetic::Sample sample = atf::synthetic::random_sample(config, rng);
    const atf::EmbeddingVector full = atf::encode(atf::tokenize(sample.image, weights, config), weights, config);

    const atf::DetectorSpec detector{atf::DetectorKind::ground_truth, 0.4, 4};
    const atf::AtfResult filtered = atf::atf_embed(sample.image, weights, config, static_mask, detector, sample.objects);

    const atf::EmbeddingVector& f = filtered.embedding;
    double dot = 0, nf = 0, nu = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        dot += full.values[i] * f.values[i];
        nu += full.values[i] * full.values[i];
        nf += f.values[i] * f.values[i];
    }
    std::printf("tokens %zu -> %zu, cosine to unfiltered %.4f\n", filtered.stats.tokens_before,
                filtered.stats.tokens_after, dot / std::sqrt(nu * nf));
    return 0;
}
