// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "atf/archive.hpp"
#include "atf/image.hpp"
#include "atf/mask.hpp"
#include "atf/vit.hpp"

namespace atf {

// Per-pixel detection flags in model-input pixel space.
struct PixelMask {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> bits;

    PixelMask() = default;
    PixelMask(std::size_t w, std::size_t h, bool value = false) : width(w), height(h), bits(w * h, value ? 1 : 0) {}

    bool at(std::size_t y, std::size_t x) const { return bits[y * width + x] != 0; }
    void set(std::size_t y, std::size_t x, bool value = true) { bits[y * width + x] = value ? 1 : 0; }
    std::size_t popcount() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1)); }

    bool operator==(const PixelMask&) const = default;
};

enum class DetectorKind { ground_truth, luminance, score_map };

inline std::string to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::ground_truth: return "ground-truth";
        case DetectorKind::luminance: return "luminance";
        case DetectorKind::score_map: return "score-map";
    }
    return "?";
}

inline DetectorKind parse_detector_kind(const std::string& s) {
    if (s == "ground-truth" || s == "ground_truth") {
        return DetectorKind::ground_truth;
    }
    if (s == "luminance") {
        return DetectorKind::luminance;
    }
    if (s == "score-map" || s == "score_map") {
        return DetectorKind::score_map;
    }
    throw PreconditionError("unknown detector '" + s + "' (ground-truth, luminance or score-map)");
}

inline constexpr double kDefaultDetectionThreshold = 0.4;
inline constexpr std::size_t kDefaultDilationRadius = 12;

struct DetectorSpec {
    DetectorKind kind = DetectorKind::luminance;
    double threshold = kDefaultDetectionThreshold;
    std::size_t dilation_radius = kDefaultDilationRadius;

    void validate() const {
        if (!(threshold >= 0.0 && threshold <= 1.0)) {
            throw PreconditionError("detector threshold must lie in [0, 1]");
        }
    }
};

// Detector side input: a verbatim pixel mask (ground_truth) or a real-valued
// score map [height × width] (score_map). Luminance needs none.
using DetectorAux = std::variant<std::monostate, PixelMask, Tensor>;

inline PixelMask pixel_mask_from_image(const ImageU8& img) {
    if (img.channels != 1) {
        throw FormatError("detection masks must be single-channel PGM");
    }
    PixelMask m(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        m.bits[i] = img.pixels[i] ? 1 : 0;
    }
    return m;
}

inline ImageU8 pixel_mask_to_image(const PixelMask& m) {
    ImageU8 img(m.width, m.height, 1);
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        img.pixels[i] = m.bits[i] ? 255 : 0;
    }
    return img;
}

inline DetectorAux load_detector_aux(DetectorKind kind, const std::optional<std::filesystem::path>& path) {
    if (kind == DetectorKind::luminance) {
        return std::monostate{};
    }
    if (!path) {
        throw InputError(to_string(kind) + " detector needs an auxiliary file");
    }
    if (kind == DetectorKind::ground_truth) {
        return pixel_mask_from_image(read_netpbm(*path));
    }
    const TensorList tensors = load_archive(*path);
    if (tensors.size() != 1 || tensors.front().tensor.rank() != 2) {
        throw FormatError(path->string() + ": score map archive must hold exactly one 2-D tensor");
    }
    return tensors.front().tensor;
}

// Chebyshev-radius max pooling: on iff any input pixel within distance
// `radius` is on. Separable, so it runs as a row pass then a column pass.
inline PixelMask dilate(const PixelMask& mask, std::size_t radius) {
    if (radius == 0) {
        return mask;
    }
    const std::size_t w = mask.width;
    const std::size_t h = mask.height;
    auto sweep = [radius](const std::uint8_t* src, std::uint8_t* dst, std::size_t n, std::size_t stride) {
        // Distance to the nearest on-pixel seen so far, swept both ways.
        std::size_t since = radius + 1;
        for (std::size_t i = 0; i < n; ++i) {
            since = src[i * stride] ? 0 : since + 1;
            dst[i * stride] = since <= radius ? 1 : 0;
        }
        since = radius + 1;
        for (std::size_t i = n; i-- > 0;) {
            since = src[i * stride] ? 0 : since + 1;
            if (since <= radius) {
                dst[i * stride] = 1;
            }
        }
    };
    PixelMask rows(w, h);
    for (std::size_t y = 0; y < h; ++y) {
        sweep(&mask.bits[y * w], &rows.bits[y * w], w, 1);
    }
    PixelMask out(w, h);
    for (std::size_t x = 0; x < w; ++x) {
        sweep(&rows.bits[x], &out.bits[x], h, w);
    }
    return out;
}

// Thresholds the image or the auxiliary input (≥ threshold is on), then dilates.
inline PixelMask detect(const ImageU8& image, const DetectorSpec& spec, const DetectorAux& aux) {
    spec.validate();
    PixelMask raw(image.width, image.height);
    switch (spec.kind) {
        case DetectorKind::ground_truth: {
            const auto* given = std::get_if<PixelMask>(&aux);
            if (!given) {
                throw InputError("ground-truth detector needs a pixel mask");
            }
            if (given->width != image.width || given->height != image.height) {
                throw InputError("ground-truth mask is " + std::to_string(given->width) + "x" +
                                 std::to_string(given->height) + ", image is " + std::to_string(image.width) + "x" +
                                 std::to_string(image.height));
            }
            raw = *given;
            break;
        }
        case DetectorKind::luminance: {
            const double scale = 255.0 * static_cast<double>(image.channels);
            for (std::size_t y = 0; y < image.height; ++y) {
                for (std::size_t x = 0; x < image.width; ++x) {
                    unsigned sum = 0;
                    for (std::size_t ch = 0; ch < image.channels; ++ch) {
                        sum += image.at(y, x, ch);
                    }
                    raw.set(y, x, static_cast<double>(sum) / scale >= spec.threshold);
                }
            }
            break;
        }
        case DetectorKind::score_map: {
            const auto* scores = std::get_if<Tensor>(&aux);
            if (!scores) {
                throw InputError("score-map detector needs a score tensor");
            }
            if (scores->rank() != 2 || scores->dim(0) != image.height || scores->dim(1) != image.width) {
                throw InputError("score map shape " + shape_to_string(scores->shape()) + " does not match image " +
                                 std::to_string(image.height) + "x" + std::to_string(image.width));
            }
            for (std::size_t i = 0; i < raw.bits.size(); ++i) {
                raw.bits[i] = static_cast<double>((*scores)[i]) >= spec.threshold ? 1 : 0;
            }
            break;
        }
    }
    return dilate(raw, spec.dilation_radius);
}

// A token is on when at least one pixel of its patch is on.
inline MaskVector rasterize_to_tokens(const PixelMask& mask, GridSize grid, std::size_t patch_size) {
    if (mask.width != grid.width * patch_size || mask.height != grid.height * patch_size) {
        throw ShapeError("rasterize: mask " + std::to_string(mask.width) + "x" + std::to_string(mask.height) +
                         " does not cover a " + std::to_string(grid.height) + "x" + std::to_string(grid.width) +
                         " grid of " + std::to_string(patch_size) + "px patches");
    }
    MaskVector tokens(grid.count());
    for (std::size_t y = 0; y < mask.height; ++y) {
        const std::size_t row_base = (y / patch_size) * grid.width;
        for (std::size_t x = 0; x < mask.width; ++x) {
            if (mask.at(y, x)) {
                tokens.set(row_base + x / patch_size);
            }
        }
    }
    return tokens;
}

// Keeps rows whose original index is flagged; rows are copied unchanged.
inline TokenSet filter_tokens(const TokenSet& tokens, const MaskVector& mask) {
    if (mask.size() != tokens.full_count()) {
        throw ShapeError("filter_tokens: mask has " + std::to_string(mask.size()) + " entries, grid has " +
                         std::to_string(tokens.full_count()) + " tokens");
    }
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < tokens.size(); ++r) {
        if (mask[tokens.kept_indices[r]]) {
            rows.push_back(r);
        }
    }
    if (rows.empty()) {
        throw EmptyResultError("filter_tokens: mask removes every token");
    }
    const std::size_t d = tokens.tokens.dim(1);
    TokenSet out{Tensor({rows.size(), d}), tokens.grid, {}};
    out.kept_indices.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = tokens.tokens.row(rows[i]);
        std::copy(src.begin(), src.end(), out.tokens.row(i).begin());
        out.kept_indices.push_back(tokens.kept_indices[rows[i]]);
    }
    return out;
}

struct AtfStats {
    std::size_t tokens_before = 0;
    std::size_t tokens_after = 0;
    double detector_ms = 0.0;  // detect, dilate, rasterize and union
    double encoder_ms = 0.0;   // tokenize, filter and encode
};

struct AtfResult {
    EmbeddingVector embedding;
    AtfStats stats;
    MaskVector keep;
};

namespace filtering_detail {

template <typename Fn>
auto timed(double& ms, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto result = fn();
    ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace filtering_detail

// Object-region mask for one image: detect, dilate, rasterize.
inline MaskVector object_region_mask(const ImageU8& image, const VitConfig& config, const DetectorSpec& spec,
                                     const DetectorAux& aux) {
    return rasterize_to_tokens(detect(image, spec, aux), config.grid(), config.patch_size);
}

// Embedding with the token filter between tokenizer and encoder; the encoder
// sees only tokens in static_mask ∨ object-region mask.
inline AtfResult atf_embed(const ImageU8& image, const ModelWeights& weights, const VitConfig& config,
                           const MaskVector& static_mask, const DetectorSpec& spec, const DetectorAux& aux) {
    using filtering_detail::timed;
    if (static_mask.size() != config.tokens()) {
        throw ShapeError("atf_embed: static mask has " + std::to_string(static_mask.size()) +
                         " entries, model has " + std::to_string(config.tokens()) + " tokens");
    }
    AtfResult result;
    result.keep = timed(result.stats.detector_ms, [&] {
        return union_masks(static_mask, object_region_mask(image, config, spec, aux));
    });
    result.embedding = timed(result.stats.encoder_ms, [&] {
        return encode(filter_tokens(tokenize(image, weights, config), result.keep), weights, config);
    });
    result.stats.tokens_before = config.tokens();
    result.stats.tokens_after = result.keep.popcount();
    return result;
}

}  // namespace atf
