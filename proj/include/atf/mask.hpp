// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "atf/error.hpp"

namespace atf {

// One flag per token in original (row-major patch) order.
class MaskVector {
  public:
    MaskVector() = default;
    explicit MaskVector(std::size_t length, bool value = false) : bits_(length, value ? 1 : 0) {}
    explicit MaskVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        for (auto& b : bits_) {
            b = b ? 1 : 0;
        }
    }
    MaskVector(std::initializer_list<int> bits) {
        for (int b : bits) {
            bits_.push_back(b ? 1 : 0);
        }
    }

    std::size_t size() const { return bits_.size(); }
    bool operator[](std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t i, bool value = true) { bits_[i] = value ? 1 : 0; }

    std::size_t popcount() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1)); }
    bool none() const { return popcount() == 0; }

    // Every flag set here is also set in `other`.
    bool subset_of(const MaskVector& other) const {
        if (other.size() != size()) {
            return false;
        }
        for (std::size_t i = 0; i < size(); ++i) {
            if (bits_[i] && !other.bits_[i]) {
                return false;
            }
        }
        return true;
    }

    std::string bitstring() const {
        std::string s;
        s.reserve(bits_.size());
        for (auto b : bits_) {
            s.push_back(b ? '1' : '0');
        }
        return s;
    }

    bool operator==(const MaskVector&) const = default;

  private:
    std::vector<std::uint8_t> bits_;
};

// Elementwise OR.
inline MaskVector union_masks(const MaskVector& a, const MaskVector& b) {
    if (a.size() != b.size()) {
        throw ShapeError("union_masks: lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                         " differ");
    }
    MaskVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.set(i, a[i] || b[i]);
    }
    return out;
}

// Text form "T=<n>;<bitstring>", e.g. "T=4;1010".
inline std::string mask_to_text(const MaskVector& m) {
    return "T=" + std::to_string(m.size()) + ";" + m.bitstring();
}

inline MaskVector mask_from_text(std::string text, std::optional<std::size_t> expected_length = std::nullopt) {
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
        text.pop_back();
    }
    const auto semi = text.find(';');
    if (text.rfind("T=", 0) != 0 || semi == std::string::npos) {
        throw FormatError("mask: expected 'T=<n>;<bits>'");
    }
    const std::string count = text.substr(2, semi - 2);
    if (count.empty() || count.size() > 12 || count.find_first_not_of("0123456789") != std::string::npos) {
        throw FormatError("mask: bad token count '" + count + "'");
    }
    const std::size_t n = std::stoull(count);
    const std::string bits = text.substr(semi + 1);
    if (bits.size() != n) {
        throw FormatError("mask: header says T=" + count + " but " + std::to_string(bits.size()) + " bits follow");
    }
    if (expected_length && n != *expected_length) {
        throw FormatError("mask: has " + std::to_string(n) + " tokens, model has " +
                          std::to_string(*expected_length));
    }
    MaskVector m(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (bits[i] == '1') {
            m.set(i);
        } else if (bits[i] != '0') {
            throw FormatError("mask: bit string may only contain 0 and 1");
        }
    }
    return m;
}

inline void save_mask(const std::filesystem::path& path, const MaskVector& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << mask_to_text(m) << '\n';
}

inline MaskVector load_mask(const std::filesystem::path& path, std::optional<std::size_t> expected_length = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open mask " + path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (std::count(text.begin(), text.end(), '\n') > 1) {
        throw FormatError(path.string() + ": mask file must be a single line");
    }
    try {
        return mask_from_text(std::move(text), expected_length);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace atf
