// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "atf/config.hpp"
#include "atf/error.hpp"

namespace atf {

// Matmul flop count of the encoder (a multiply-add counts as 2 flops). Norms,
// softmax, activations and the pooling head are left out. Per layer with T
// tokens, width d and MLP hidden width h = round(d · mlp_ratio):
//
//   projections  8·T·d²    Q, K, V and output, each 2·T·d²
//   attention    4·T²·d    scores Q·Kᵀ and the weighted sum over V
//   mlp          4·T·d·h   two dense layers
struct FlopBreakdown {
    std::uint64_t projection = 0;
    std::uint64_t attention = 0;
    std::uint64_t mlp = 0;

    std::uint64_t total() const { return projection + attention + mlp; }
};

inline FlopBreakdown flop_estimate(const VitConfig& config, std::uint64_t tokens) {
    if (tokens == 0) {
        throw PreconditionError("flop_estimate: token count must be at least 1");
    }
    const std::uint64_t d = config.d_model;
    const std::uint64_t h = config.mlp_hidden();
    const std::uint64_t L = config.layers;
    return {L * 8 * tokens * d * d, L * 4 * tokens * tokens * d, L * 4 * tokens * d * h};
}

}  // namespace atf
