// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "atf/config.hpp"
#include "atf/filtering.hpp"
#include "atf/image.hpp"

// Desk-scale stand-in for a text-in-image dataset: dark noisy backgrounds with
// a few bright rectangles playing the role of text regions. The rectangles'
// pixel mask doubles as ground-truth detection.

namespace atf::synthetic {

struct Box {
    std::size_t y0, x0, height, width;
};

struct Sample {
    ImageU8 image;
    PixelMask objects;
    std::vector<Box> boxes;
};

inline std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

inline void paint_box(Sample& s, const Box& b, std::mt19937_64& rng) {
    for (std::size_t y = b.y0; y < b.y0 + b.height; ++y) {
        for (std::size_t x = b.x0; x < b.x0 + b.width; ++x) {
            for (std::size_t ch = 0; ch < s.image.channels; ++ch) {
                s.image.at(y, x, ch) = static_cast<std::uint8_t>(draw(rng, 170, 255));
            }
            s.objects.set(y, x);
        }
    }
    s.boxes.push_back(b);
}

inline Sample background(const VitConfig& config, std::mt19937_64& rng) {
    const std::size_t n = config.image_size;
    Sample s{ImageU8(n, n, config.channels), PixelMask(n, n), {}};
    for (auto& p : s.image.pixels) {
        p = static_cast<std::uint8_t>(draw(rng, 0, 80));
    }
    return s;
}

// One to `max_boxes` rectangles with sides between n/8 and n/3.
inline Sample random_sample(const VitConfig& config, std::mt19937_64& rng, std::size_t max_boxes = 3) {
    Sample s = background(config, rng);
    const std::size_t n = config.image_size;
    const std::size_t lo = std::max<std::size_t>(1, n / 8);
    const std::size_t hi = std::max(lo, n / 3);
    const std::size_t boxes = draw(rng, 1, std::max<std::size_t>(1, max_boxes));
    for (std::size_t i = 0; i < boxes; ++i) {
        const std::size_t h = draw(rng, lo, hi);
        const std::size_t w = draw(rng, lo, hi);
        paint_box(s, {draw(rng, 0, n - h), draw(rng, 0, n - w), h, w}, rng);
    }
    return s;
}

}  // namespace atf::synthetic
