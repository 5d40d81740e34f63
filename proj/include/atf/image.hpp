// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "atf/error.hpp"

namespace atf {

// 8-bit interleaved image, rows top to bottom, channels 1 (gray) or 3 (RGB).
struct ImageU8 {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;
    std::vector<std::uint8_t> pixels;

    ImageU8() = default;
    ImageU8(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), pixels(w * h * c, fill) {}

    std::uint8_t& at(std::size_t y, std::size_t x, std::size_t ch = 0) {
        return pixels[(y * width + x) * channels + ch];
    }
    std::uint8_t at(std::size_t y, std::size_t x, std::size_t ch = 0) const {
        return pixels[(y * width + x) * channels + ch];
    }

    bool operator==(const ImageU8&) const = default;
};

namespace netpbm_detail {

inline std::string next_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') {
                c = in.get();
            }
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    // The single whitespace byte after maxval has been consumed by the loop.
    return tok;
}

inline std::size_t parse_positive(const std::string& tok, const std::string& path) {
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos || tok.size() > 9) {
        throw FormatError(path + ": bad netpbm header field '" + tok + "'");
    }
    const std::size_t v = std::stoul(tok);
    if (v == 0) {
        throw FormatError(path + ": netpbm dimensions must be positive");
    }
    return v;
}

}  // namespace netpbm_detail

// Reads binary PGM (P5) or PPM (P6) with maxval 255.
inline ImageU8 read_netpbm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open image " + path.string());
    }
    using netpbm_detail::next_token;
    const std::string magic = next_token(in);
    std::size_t channels = 0;
    if (magic == "P5") {
        channels = 1;
    } else if (magic == "P6") {
        channels = 3;
    } else {
        throw FormatError(path.string() + ": unsupported netpbm magic '" + magic + "' (need P5 or P6)");
    }
    const std::size_t w = netpbm_detail::parse_positive(next_token(in), path.string());
    const std::size_t h = netpbm_detail::parse_positive(next_token(in), path.string());
    const std::size_t maxval = netpbm_detail::parse_positive(next_token(in), path.string());
    if (maxval != 255) {
        throw FormatError(path.string() + ": only maxval 255 is supported");
    }
    ImageU8 img(w, h, channels);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw FormatError(path.string() + ": truncated pixel data");
    }
    return img;
}

// P5 for one channel, P6 for three. Header is "P5\n<w> <h>\n255\n".
inline void write_netpbm(const std::filesystem::path& path, const ImageU8& img) {
    if (img.channels != 1 && img.channels != 3) {
        throw PreconditionError("netpbm supports 1 or 3 channels");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << (img.channels == 1 ? "P5" : "P6") << '\n' << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

}  // namespace atf
