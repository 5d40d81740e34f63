// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "atf/attention_profile.hpp"
#include "reference.hpp"
#include "test_util.hpp"

using namespace atf;
using atf::testing::random_image;
using atf::testing::read_bytes;
using atf::testing::scratch_dir;
using atf::testing::tiny_config;

namespace {

struct Instance {
    VitConfig config;
    ModelWeights weights;
    ImageU8 image;
};

// T ≤ 16, H ≤ 4, d_k ≤ 8.
Instance random_instance(std::mt19937_64& rng) {
    const std::size_t side = 1 + rng() % 4;
    const std::size_t patch = 2 + 2 * (rng() % 2);
    const std::size_t heads = 1 + rng() % 4;
    const std::size_t dk = 1 + rng() % 8;
    const std::size_t channels = rng() % 2 ? 3 : 1;
    VitConfig c = tiny_config(side * patch, patch, channels, heads * dk, heads, 1);
    ModelWeights w = init_weights(c, rng());
    return {c, std::move(w), random_image(rng, c.image_size, channels)};
}

AttentionSummary summary_of(std::vector<float> values) {
    const std::size_t n = values.size();
    double total = 0;
    for (float v : values) total += v;
    return {Tensor::vector(std::move(values)), total / static_cast<double>(n)};
}

}  // namespace

TEST(AttentionValues, IdenticalTokensGiveUniformAttention) {
    const VitConfig c = tiny_config(16, 4, 1, 8, 2, 1);
    const ModelWeights w = init_weights(c, 1);
    TokenSet set{Tensor({16, 8}), c.grid(), {}};
    for (std::size_t t = 0; t < 16; ++t) {
        set.kept_indices.push_back(t);
        for (std::size_t i = 0; i < 8; ++i) set.tokens.at(t, i) = 0.1f * static_cast<float>(i) - 0.3f;
    }
    const AttentionSummary s = attention_values(set, w, c);
    for (std::size_t t = 0; t < 16; ++t) {
        EXPECT_EQ(s.values[t], s.values[0]);
        EXPECT_NEAR(s.values[t], 1.0 / 16.0, 1e-7);
    }
    EXPECT_TRUE(high_attention_mask(s).none());
}

TEST(AttentionValues, SumsToOneAndMeanIsOneOverT) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const Instance inst = random_instance(rng);
        const AttentionSummary s = attention_values(inst.image, inst.weights, inst.config);
        double total = 0;
        for (float v : s.values.data()) total += v;
        EXPECT_NEAR(total, 1.0, 1e-5);
        EXPECT_NEAR(s.mean, 1.0 / static_cast<double>(inst.config.tokens()), 1e-7);
    }
}

TEST(AttentionValues, MatchesBruteForceOracle) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const Instance inst = random_instance(rng);
        const AttentionSummary s = attention_values(inst.image, inst.weights, inst.config);
        const auto tokens = reference::tokenize(inst.image, inst.weights, inst.config);
        const auto expected = reference::attention_values(tokens, inst.weights, inst.config);
        for (std::size_t t = 0; t < expected.size(); ++t) {
            ASSERT_NEAR(s.values[t], expected[t], 1e-5) << "trial " << trial << " token " << t;
        }
    }
}

TEST(AttentionValues, NeedsAnEncoderLayer) {
    const VitConfig c = tiny_config(8, 4, 1, 8, 2, 0);
    EXPECT_THROW(attention_values(ImageU8(8, 8, 1), init_weights(c, 1), c), PreconditionError);
}

TEST(HighAttentionMask, StrictlyAboveAverage) {
    EXPECT_EQ(high_attention_mask(summary_of({0.5f, 0.3f, 0.2f})), (MaskVector{1, 0, 0}));
    EXPECT_TRUE(high_attention_mask(summary_of({0.25f, 0.25f, 0.25f, 0.25f})).none());
}

TEST(HighAttentionMask, SingleTokenIsNeverHigh) {
    const VitConfig c = tiny_config(4, 4, 1, 8, 2, 1);
    const AttentionSummary s = attention_values(ImageU8(4, 4, 1, 9), init_weights(c, 4), c);
    EXPECT_EQ(s.values[0], 1.0f);
    EXPECT_EQ(high_attention_mask(s), (MaskVector{0}));
}

TEST(AttentionRate, CountsAcrossMasks) {
    const std::vector<MaskVector> masks{{1, 0, 0}, {1, 1, 0}};
    const AttentionRateMap map = rates_from_masks(masks);
    EXPECT_EQ(map.rates, (std::vector<double>{1.0, 0.5, 0.0}));
    EXPECT_EQ(map.sample_count, 2u);
}

TEST(AttentionRate, SingleImageEqualsItsMask) {
    const VitConfig c = tiny_config(16, 4, 1, 8, 2, 1);
    const ModelWeights w = init_weights(c, 5);
    std::mt19937_64 rng(5);
    const std::vector<ImageU8> images{random_image(rng, 16, 1)};
    const AttentionRateMap map = attention_rate(images, w, c);
    const MaskVector mask = high_attention_mask(attention_values(images[0], w, c));
    for (std::size_t t = 0; t < mask.size(); ++t) {
        EXPECT_EQ(map.rates[t], mask[t] ? 1.0 : 0.0);
    }
}

TEST(AttentionRate, OrderAndDuplicationInvariant) {
    const VitConfig c = tiny_config(16, 4, 1, 8, 2, 1);
    const ModelWeights w = init_weights(c, 6);
    std::mt19937_64 rng(6);
    std::vector<ImageU8> images;
    for (int i = 0; i < 5; ++i) images.push_back(random_image(rng, 16, 1));
    const AttentionRateMap base = attention_rate(images, w, c);

    std::vector<ImageU8> reversed(images.rbegin(), images.rend());
    EXPECT_EQ(attention_rate(reversed, w, c).rates, base.rates);

    std::vector<ImageU8> doubled = images;
    doubled.insert(doubled.end(), images.begin(), images.end());
    EXPECT_EQ(attention_rate(doubled, w, c).rates, base.rates);

    for (std::size_t t = 0; t < base.rates.size(); ++t) {
        EXPECT_GE(base.rates[t], 0.0);
        EXPECT_LE(base.rates[t], 1.0);
        EXPECT_EQ(base.rates[t], static_cast<double>(base.counts[t]) / 5.0);
    }
}

TEST(AttentionRate, EmptyImageListRejected) {
    const VitConfig c = tiny_config();
    EXPECT_THROW(attention_rate(std::vector<ImageU8>{}, init_weights(c, 1), c), PreconditionError);
}

TEST(Heatmap, ExtremesAndRounding) {
    AttentionRateMap zeros{{0, 0, 0, 0}, 1, {0, 0, 0, 0}};
    EXPECT_EQ(heatmap_image(zeros, {2, 2}).pixels, (std::vector<std::uint8_t>(4, 0)));
    AttentionRateMap ones{{1, 1, 1, 1}, 1, {1, 1, 1, 1}};
    EXPECT_EQ(heatmap_image(ones, {2, 2}).pixels, (std::vector<std::uint8_t>(4, 255)));
    AttentionRateMap mixed{{1.0, 0.5, 0.0, 0.25}, 4, {4, 2, 0, 1}};
    EXPECT_EQ(heatmap_image(mixed, {2, 2}).pixels, (std::vector<std::uint8_t>{255, 128, 0, 64}));
    EXPECT_THROW(heatmap_image(mixed, {3, 2}), ShapeError);
}

TEST(Heatmap, ExportMatchesGoldenFile) {
    const auto dir = scratch_dir("heatmap");
    export_heatmap({{1.0, 0.5, 0.0, 0.25}, 4, {4, 2, 0, 1}}, {2, 2}, dir / "h.pgm");
    EXPECT_EQ(read_bytes(dir / "h.pgm"), read_bytes(std::filesystem::path(ATF_GOLDEN_DIR) / "heatmap_2x2.pgm"));
}
