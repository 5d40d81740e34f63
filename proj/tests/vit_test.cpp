// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "atf/vit.hpp"
#include "reference.hpp"
#include "test_util.hpp"

using namespace atf;
using atf::testing::random_image;
using atf::testing::random_tensor;
using atf::testing::tiny_config;

namespace {

// Rows reordered by `perm`, kept_indices carried along.
TokenSet permuted(const TokenSet& set, const std::vector<std::size_t>& perm) {
    TokenSet out = set;
    for (std::size_t r = 0; r < perm.size(); ++r) {
        const auto src = set.tokens.row(perm[r]);
        std::copy(src.begin(), src.end(), out.tokens.row(r).begin());
        out.kept_indices[r] = set.kept_indices[perm[r]];
    }
    return out;
}

std::vector<std::size_t> random_perm(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        std::swap(p[i - 1], p[rng() % i]);
    }
    return p;
}

}  // namespace

TEST(Tokenize, GridAndIndices) {
    const VitConfig c = tiny_config(8, 4, 1);
    std::mt19937_64 rng(1);
    const TokenSet set = tokenize(random_image(rng, 8, 1), init_weights(c, 1), c);
    EXPECT_EQ(set.grid, (GridSize{2, 2}));
    EXPECT_EQ(set.kept_indices, (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_EQ(set.tokens.shape(), (Shape{4, 8}));
}

TEST(Tokenize, BlankImageGivesPositionalEmbeddings) {
    const VitConfig c = tiny_config(8, 4, 3);
    ModelWeights w = init_weights(c, 2);
    std::fill(w.patch_projection.bias.data().begin(), w.patch_projection.bias.data().end(), 0.0f);
    const TokenSet set = tokenize(ImageU8(8, 8, 3, 0), w, c);
    EXPECT_TRUE(bit_equal(set.tokens, w.positional_embeddings));
}

TEST(Tokenize, MatchesDirectAffineFormula) {
    std::mt19937_64 rng(3);
    for (std::size_t channels : {1u, 3u}) {
        const VitConfig c = tiny_config(8, 4, channels);
        const ModelWeights w = init_weights(c, 3 + channels);
        const ImageU8 img = random_image(rng, 8, channels);
        const TokenSet set = tokenize(img, w, c);
        const auto expected = reference::tokenize(img, w, c);
        for (std::size_t t = 0; t < 4; ++t) {
            for (std::size_t o = 0; o < c.d_model; ++o) {
                EXPECT_NEAR(set.tokens.at(t, o), expected[t][o], 1e-6);
            }
        }
    }
}

TEST(Tokenize, RejectsWrongImageSize) {
    const VitConfig c = tiny_config(8, 4, 1);
    const ModelWeights w = init_weights(c, 1);
    EXPECT_THROW(tokenize(ImageU8(12, 8, 1), w, c), ShapeError);
    EXPECT_THROW(tokenize(ImageU8(8, 8, 3), w, c), ShapeError);
}

TEST(EncoderLayer, ZeroWeightsPassTokensThrough) {
    const VitConfig c = tiny_config(16, 4, 1, 8, 2, 1);
    const ModelWeights zero = zero_weights(c);
    std::mt19937_64 rng(4);
    TokenSet set = tokenize(random_image(rng, 16, 1), init_weights(c, 4), c);
    const TokenSet out = encoder_layer(set, zero.layers[0], c);
    EXPECT_TRUE(bit_equal(out.tokens, set.tokens));
    EXPECT_EQ(out.kept_indices, set.kept_indices);
}

TEST(EncoderLayer, SingleTokenClosedForm) {
    // With one key the attention weight is exactly 1, so the block reduces to
    // y = x + Wo(Wv LN(x) + bv) + bo, then y + MLP(LN(y)).
    const VitConfig c = tiny_config(4, 4, 1, 8, 2, 1);
    const ModelWeights w = init_weights(c, 5);
    std::mt19937_64 rng(5);
    const Tensor x = random_tensor(rng, {1, 8});
    const TokenSet out = encoder_layer(TokenSet{x, c.grid(), {0}}, w.layers[0], c);

    const auto& l = w.layers[0];
    const auto xm = reference::to_matrix(x);
    const auto v = reference::affine(reference::norm(xm, l.attn_norm, c.layer_norm_eps), l.value);
    auto y = reference::affine(v, l.out);
    for (std::size_t i = 0; i < 8; ++i) y[0][i] += xm[0][i];
    auto hidden = reference::affine(reference::norm(y, l.mlp_norm, c.layer_norm_eps), l.fc1);
    for (double& h : hidden[0]) h = 0.5 * h * (1.0 + std::erf(h / std::sqrt(2.0)));
    const auto m = reference::affine(hidden, l.fc2);
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_NEAR(out.tokens[i], y[0][i] + m[0][i], 1e-5);
    }
}

TEST(EncoderLayer, PermutationEquivariant) {
    const VitConfig c = tiny_config(16, 4, 1, 8, 2, 1);
    const ModelWeights w = init_weights(c, 6);
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const TokenSet set = tokenize(random_image(rng, 16, 1), w, c);
        const auto perm = random_perm(rng, set.size());
        const TokenSet a = permuted(encoder_layer(set, w.layers[0], c), perm);
        const TokenSet b = encoder_layer(permuted(set, perm), w.layers[0], c);
        EXPECT_EQ(a.kept_indices, b.kept_indices);
        EXPECT_LE(max_abs_diff(a.tokens, b.tokens), 1e-5);
    }
}

TEST(Encode, ZeroDepthMeanPoolIsTokenMean) {
    VitConfig c = tiny_config(8, 4, 1, 8, 2, 0);
    c.final_norm = false;
    const ModelWeights w = init_weights(c, 7);
    std::mt19937_64 rng(7);
    const TokenSet set = tokenize(random_image(rng, 8, 1), w, c);
    const EmbeddingVector e = encode(set, w, c);
    for (std::size_t i = 0; i < 8; ++i) {
        double mean = 0;
        for (std::size_t t = 0; t < 4; ++t) mean += set.tokens.at(t, i);
        EXPECT_NEAR(e.values[i], mean / 4.0, 1e-7);
    }
}

TEST(Encode, Deterministic) {
    const VitConfig c = tiny_config();
    const ModelWeights w = init_weights(c, 8);
    std::mt19937_64 rng(8);
    const TokenSet set = tokenize(random_image(rng, 8, 1), w, c);
    EXPECT_TRUE(bit_equal(encode(set, w, c).values, encode(set, w, c).values));
}

TEST(Encode, MatchesStraightLineReimplementation) {
    std::mt19937_64 rng(9);
    for (PoolingMode mode : {PoolingMode::mean, PoolingMode::attention_pool}) {
        for (int trial = 0; trial < 10; ++trial) {
            VitConfig c = tiny_config(8, 4, 1, 8, 2, 2);  // T = 4, d = 8, H = 2, L = 2
            c.pooling = mode;
            const ModelWeights w = init_weights(c, rng());
            const ImageU8 img = random_image(rng, 8, 1);
            const EmbeddingVector e = encode(tokenize(img, w, c), w, c);
            const auto expected = reference::encode(reference::tokenize(img, w, c), w, c);
            for (std::size_t i = 0; i < c.d_model; ++i) {
                EXPECT_NEAR(e.values[i], expected[i], 1e-5) << to_string(mode) << " trial " << trial;
            }
        }
    }
}

TEST(Encode, InvariantToTokenOrder) {
    std::mt19937_64 rng(10);
    for (PoolingMode mode : {PoolingMode::mean, PoolingMode::attention_pool}) {
        VitConfig c = tiny_config(16, 4, 3, 16, 4, 2);
        c.pooling = mode;
        const ModelWeights w = init_weights(c, 10);
        for (int trial = 0; trial < 5; ++trial) {
            const TokenSet set = tokenize(random_image(rng, 16, 3), w, c);
            const auto perm = random_perm(rng, set.size());
            EXPECT_LE(max_abs_diff(encode(set, w, c).values, encode(permuted(set, perm), w, c).values), 1e-5);
        }
    }
}

TEST(Encode, PreservesTokenCountThroughLayers) {
    const VitConfig c = tiny_config(16, 4, 1, 8, 2, 3);
    const ModelWeights w = init_weights(c, 11);
    std::mt19937_64 rng(11);
    TokenSet set = tokenize(random_image(rng, 16, 1), w, c);
    const auto indices = set.kept_indices;
    for (const auto& layer : w.layers) {
        set = encoder_layer(set, layer, c);
        EXPECT_EQ(set.kept_indices, indices);
        EXPECT_EQ(set.tokens.dim(0), indices.size());
    }
}

TEST(Pool, IdenticalTokensMeanIsThatToken) {
    const Tensor row = Tensor::vector({1.5f, -2.0f, 0.25f});
    Tensor tokens({5, 3});
    for (std::size_t r = 0; r < 5; ++r) {
        std::copy(row.data().begin(), row.data().end(), tokens.row(r).begin());
    }
    EXPECT_TRUE(bit_equal(pool(tokens, PoolingMode::mean, {}).values, row));
}

TEST(Pool, HandMean) {
    const Tensor tokens = Tensor::matrix(2, 2, {0, 2, 2, 0});
    const EmbeddingVector e = pool(tokens, PoolingMode::mean, {});
    EXPECT_EQ(e.values[0], 1.0f);
    EXPECT_EQ(e.values[1], 1.0f);
}

TEST(Pool, PermutationInvariantBothModes) {
    const VitConfig c = tiny_config(8, 4, 1, 8, 2, 1);
    const ModelWeights w = init_weights(c, 12);
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 1 + rng() % 9;
        const Tensor tokens = random_tensor(rng, {n, 8}, 3.0);
        const auto perm = random_perm(rng, n);
        Tensor shuffled({n, 8});
        for (std::size_t r = 0; r < n; ++r) {
            const auto src = tokens.row(perm[r]);
            std::copy(src.begin(), src.end(), shuffled.row(r).begin());
        }
        for (PoolingMode mode : {PoolingMode::mean, PoolingMode::attention_pool}) {
            EXPECT_LE(max_abs_diff(pool(tokens, mode, w.pool).values, pool(shuffled, mode, w.pool).values), 1e-6);
        }
    }
}

TEST(TokenSet, RejectsEmptyAndDuplicateIndices) {
    const VitConfig c = tiny_config();
    const ModelWeights w = init_weights(c, 13);
    TokenSet bad{Tensor({2, 8}), c.grid(), {1, 1}};
    EXPECT_THROW(encode(bad, w, c), ShapeError);
    bad.kept_indices = {0, 4};
    EXPECT_THROW(encode(bad, w, c), ShapeError);
}
