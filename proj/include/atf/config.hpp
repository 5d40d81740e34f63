// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "atf/error.hpp"

namespace atf {

enum class PoolingMode { mean, attention_pool };

inline std::string to_string(PoolingMode mode) {
    return mode == PoolingMode::mean ? "mean" : "attention_pool";
}

inline PoolingMode parse_pooling_mode(const std::string& s) {
    if (s == "mean") {
        return PoolingMode::mean;
    }
    if (s == "attention_pool") {
        return PoolingMode::attention_pool;
    }
    throw FormatError("unknown pooling mode '" + s + "' (expected mean or attention_pool)");
}

struct GridSize {
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t count() const { return height * width; }
    bool operator==(const GridSize&) const = default;
};

struct VitConfig {
    std::size_t image_size = 32;
    std::size_t patch_size = 8;
    std::size_t channels = 3;
    std::size_t d_model = 32;
    std::size_t heads = 2;
    std::size_t layers = 2;
    double mlp_ratio = 4.0;
    PoolingMode pooling = PoolingMode::mean;
    double layer_norm_eps = 1e-6;
    // When false the encoder output goes straight to the pooling head.
    bool final_norm = true;

    std::size_t grid_side() const { return image_size / patch_size; }
    GridSize grid() const { return {grid_side(), grid_side()}; }
    std::size_t tokens() const { return grid_side() * grid_side(); }
    std::size_t head_dim() const { return d_model / heads; }
    std::size_t patch_dim() const { return patch_size * patch_size * channels; }
    std::size_t mlp_hidden() const { return static_cast<std::size_t>(std::llround(d_model * mlp_ratio)); }

    void validate() const {
        if (image_size == 0 || patch_size == 0 || d_model == 0 || heads == 0) {
            throw PreconditionError("config: image_size, patch_size, d_model and heads must be positive");
        }
        if (image_size % patch_size != 0) {
            throw PreconditionError("config: image_size " + std::to_string(image_size) +
                                    " is not divisible by patch_size " + std::to_string(patch_size));
        }
        if (channels != 1 && channels != 3) {
            throw PreconditionError("config: channels must be 1 or 3");
        }
        if (d_model % heads != 0) {
            throw PreconditionError("config: d_model must be divisible by heads");
        }
        if (!(mlp_ratio > 0.0) || mlp_hidden() == 0) {
            throw PreconditionError("config: mlp_ratio must be positive");
        }
        if (!(layer_norm_eps > 0.0)) {
            throw PreconditionError("config: layer_norm_eps must be positive");
        }
    }

    bool operator==(const VitConfig&) const = default;
};

inline nlohmann::ordered_json config_to_json(const VitConfig& c) {
    nlohmann::ordered_json j;
    j["image_size"] = c.image_size;
    j["patch_size"] = c.patch_size;
    j["channels"] = c.channels;
    j["d_model"] = c.d_model;
    j["heads"] = c.heads;
    j["layers"] = c.layers;
    j["mlp_ratio"] = c.mlp_ratio;
    j["pooling"] = to_string(c.pooling);
    j["layer_norm_eps"] = c.layer_norm_eps;
    j["final_norm"] = c.final_norm;
    return j;
}

// Missing optional keys keep their defaults; unknown keys are rejected so a
// typo does not silently fall back to a default.
inline VitConfig config_from_json(const nlohmann::json& j) {
    static const char* known[] = {"image_size", "patch_size", "channels", "d_model", "heads",
                                  "layers", "mlp_ratio", "pooling", "layer_norm_eps", "final_norm"};
    VitConfig c;
    try {
        for (const auto& [key, _] : j.items()) {
            if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
                throw FormatError("config: unknown key '" + key + "'");
            }
        }
        c.image_size = j.at("image_size").get<std::size_t>();
        c.patch_size = j.at("patch_size").get<std::size_t>();
        c.channels = j.value("channels", c.channels);
        c.d_model = j.at("d_model").get<std::size_t>();
        c.heads = j.at("heads").get<std::size_t>();
        c.layers = j.at("layers").get<std::size_t>();
        c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
        if (j.contains("pooling")) {
            c.pooling = parse_pooling_mode(j.at("pooling").get<std::string>());
        }
        c.layer_norm_eps = j.value("layer_norm_eps", c.layer_norm_eps);
        c.final_norm = j.value("final_norm", c.final_norm);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline VitConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open config " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

inline void save_config(const std::filesystem::path& path, const VitConfig& c) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << config_to_json(c).dump(2) << '\n';
}

}  // namespace atf
