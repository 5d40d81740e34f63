// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "atf/archive.hpp"
#include "atf/config.hpp"
#include "atf/tensor.hpp"

namespace atf {

// Dense layer parameters, weight stored [out × in].
struct LinearWeights {
    Tensor weight;
    Tensor bias;
};

struct NormWeights {
    Tensor gamma;
    Tensor beta;
};

struct LayerWeights {
    NormWeights attn_norm;
    LinearWeights query;
    LinearWeights key;
    LinearWeights value;
    LinearWeights out;
    NormWeights mlp_norm;
    LinearWeights fc1;
    LinearWeights fc2;
};

// Single-probe attention pooling head.
struct PoolWeights {
    Tensor probe;
    LinearWeights key;
    LinearWeights value;
};

struct ModelWeights {
    LinearWeights patch_projection;  // [d × P·P·C]
    Tensor positional_embeddings;    // [T × d]
    std::vector<LayerWeights> layers;
    NormWeights final_norm;
    PoolWeights pool;
};

namespace model_detail {

inline void expect_shape(const Tensor& t, const Shape& shape, const std::string& name) {
    if (t.shape() != shape) {
        throw ShapeError("weights: '" + name + "' has shape " + shape_to_string(t.shape()) + ", expected " +
                         shape_to_string(shape));
    }
}

inline void expect_linear(const LinearWeights& l, std::size_t out, std::size_t in, const std::string& name) {
    expect_shape(l.weight, {out, in}, name + ".weight");
    expect_shape(l.bias, {out}, name + ".bias");
}

inline void expect_norm(const NormWeights& n, std::size_t d, const std::string& name) {
    expect_shape(n.gamma, {d}, name + ".gamma");
    expect_shape(n.beta, {d}, name + ".beta");
}

// Visits every parameter tensor in canonical archive order.
template <typename Weights, typename Fn>
void for_each_tensor(Weights& w, Fn&& fn) {
    auto linear = [&](auto& l, const std::string& name) {
        fn(l.weight, name + ".weight");
        fn(l.bias, name + ".bias");
    };
    auto norm = [&](auto& n, const std::string& name) {
        fn(n.gamma, name + ".gamma");
        fn(n.beta, name + ".beta");
    };
    linear(w.patch_projection, "patch_projection");
    fn(w.positional_embeddings, "positional_embeddings");
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        auto& layer = w.layers[i];
        const std::string p = "layers." + std::to_string(i) + ".";
        norm(layer.attn_norm, p + "attn_norm");
        linear(layer.query, p + "query");
        linear(layer.key, p + "key");
        linear(layer.value, p + "value");
        linear(layer.out, p + "out");
        norm(layer.mlp_norm, p + "mlp_norm");
        linear(layer.fc1, p + "fc1");
        linear(layer.fc2, p + "fc2");
    }
    norm(w.final_norm, "final_norm");
    fn(w.pool.probe, "pool.probe");
    linear(w.pool.key, "pool.key");
    linear(w.pool.value, "pool.value");
}

}  // namespace model_detail

inline void validate_weights(const ModelWeights& w, const VitConfig& c) {
    using namespace model_detail;
    const std::size_t d = c.d_model;
    expect_linear(w.patch_projection, d, c.patch_dim(), "patch_projection");
    expect_shape(w.positional_embeddings, {c.tokens(), d}, "positional_embeddings");
    if (w.layers.size() != c.layers) {
        throw ShapeError("weights: " + std::to_string(w.layers.size()) + " layers, config expects " +
                         std::to_string(c.layers));
    }
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        const auto& l = w.layers[i];
        const std::string p = "layers." + std::to_string(i) + ".";
        expect_norm(l.attn_norm, d, p + "attn_norm");
        expect_linear(l.query, d, d, p + "query");
        expect_linear(l.key, d, d, p + "key");
        expect_linear(l.value, d, d, p + "value");
        expect_linear(l.out, d, d, p + "out");
        expect_norm(l.mlp_norm, d, p + "mlp_norm");
        expect_linear(l.fc1, c.mlp_hidden(), d, p + "fc1");
        expect_linear(l.fc2, d, c.mlp_hidden(), p + "fc2");
    }
    expect_norm(w.final_norm, d, "final_norm");
    expect_shape(w.pool.probe, {d}, "pool.probe");
    expect_linear(w.pool.key, d, d, "pool.key");
    expect_linear(w.pool.value, d, d, "pool.value");
}

// All-zero weights with unit norm gains, shaped for `c`.
inline ModelWeights zero_weights(const VitConfig& c) {
    c.validate();
    const std::size_t d = c.d_model;
    auto linear = [](std::size_t out, std::size_t in) { return LinearWeights{Tensor({out, in}), Tensor({out})}; };
    auto norm = [](std::size_t n) { return NormWeights{Tensor::filled({n}, 1.0f), Tensor({n})}; };
    ModelWeights w;
    w.patch_projection = linear(d, c.patch_dim());
    w.positional_embeddings = Tensor({c.tokens(), d});
    for (std::size_t i = 0; i < c.layers; ++i) {
        w.layers.push_back(LayerWeights{norm(d), linear(d, d), linear(d, d), linear(d, d), linear(d, d), norm(d),
                                        linear(c.mlp_hidden(), d), linear(d, c.mlp_hidden())});
    }
    w.final_norm = norm(d);
    w.pool = PoolWeights{Tensor({d}), linear(d, d), linear(d, d)};
    return w;
}

// Uniform draw in [-bound, bound) from the top 53 bits of a mt19937_64 word.
// Spelled out rather than using std::uniform_real_distribution so archives
// initialized from a seed are identical across standard libraries.
inline float uniform_symmetric(std::mt19937_64& rng, double bound) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return static_cast<float>((2.0 * unit - 1.0) * bound);
}

// Seeded random initialization. Dense weights are U(-1/√fan_in, 1/√fan_in),
// biases U(-0.02, 0.02), positional embeddings U(-1, 1); norm gains are 1 and
// shifts 0. Tensors are filled in canonical archive order from one stream.
inline ModelWeights init_weights(const VitConfig& c, std::uint64_t seed) {
    ModelWeights w = zero_weights(c);
    std::mt19937_64 rng(seed);
    model_detail::for_each_tensor(w, [&](Tensor& t, const std::string& name) {
        double bound = 0.0;
        if (name.ends_with(".weight")) {
            bound = 1.0 / std::sqrt(static_cast<double>(t.dim(1)));
        } else if (name.ends_with(".bias")) {
            bound = 0.02;
        } else if (name == "positional_embeddings") {
            bound = 1.0;
        } else if (name == "pool.probe") {
            bound = 1.0 / std::sqrt(static_cast<double>(t.size()));
        } else {
            return;  // norm parameters keep gamma = 1, beta = 0
        }
        for (float& v : t.data()) {
            v = uniform_symmetric(rng, bound);
        }
    });
    return w;
}

inline TensorList weights_to_tensors(const ModelWeights& w) {
    TensorList out;
    model_detail::for_each_tensor(w, [&](const Tensor& t, const std::string& name) { out.push_back({name, t}); });
    return out;
}

inline void save_weights(const std::filesystem::path& path, const ModelWeights& w) {
    save_archive(path, weights_to_tensors(w));
}

inline ModelWeights load_weights(const std::filesystem::path& path, const VitConfig& c) {
    const TensorList tensors = load_archive(path);
    ModelWeights w = zero_weights(c);
    std::size_t used = 0;
    model_detail::for_each_tensor(w, [&](Tensor& t, const std::string& name) {
        t = find_tensor(tensors, name);
        ++used;
    });
    if (used != tensors.size()) {
        throw FormatError(path.string() + ": archive holds tensors the model does not use");
    }
    try {
        validate_weights(w, c);
    } catch (const ShapeError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return w;
}

}  // namespace atf
