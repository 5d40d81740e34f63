// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "atf/attention_profile.hpp"
#include "atf/mask.hpp"

namespace atf {

inline constexpr std::size_t kDefaultCalibrationSamples = 128;

// Static-region mask from per-image layer-1 attention: token t is kept when its
// mean attention over the samples is strictly above the mean over all tokens
// and samples. Each token's per-sample values are summed in double in sorted
// order, so the mask does not depend on sample order and equal attention
// everywhere yields an empty mask.
inline MaskVector static_region_mask(std::span<const AttentionSummary> summaries) {
    if (summaries.empty()) {
        throw PreconditionError("static_region_mask: sample set is empty");
    }
    const std::size_t T = summaries.front().values.size();
    for (const auto& s : summaries) {
        if (s.values.size() != T) {
            throw ShapeError("static_region_mask: samples disagree on token count");
        }
    }
    std::vector<double> per_token(T, 0.0);
    std::vector<float> column(summaries.size());
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < summaries.size(); ++i) {
            column[i] = summaries[i].values[t];
        }
        std::sort(column.begin(), column.end());
        for (float v : column) {
            per_token[t] += v;
        }
    }
    const double n = static_cast<double>(summaries.size());
    double grand = 0.0;
    for (double v : per_token) {
        grand += v;
    }
    const double threshold = grand / (static_cast<double>(T) * n);
    MaskVector mask(T);
    for (std::size_t t = 0; t < T; ++t) {
        mask.set(t, per_token[t] / n > threshold);
    }
    return mask;
}

inline MaskVector static_region_mask(std::span<const ImageU8> samples, const ModelWeights& weights,
                                     const VitConfig& config) {
    if (samples.empty()) {
        throw PreconditionError("static_region_mask: sample set is empty");
    }
    std::vector<AttentionSummary> summaries;
    summaries.reserve(samples.size());
    for (const auto& image : samples) {
        summaries.push_back(attention_values(image, weights, config));
    }
    return static_region_mask(summaries);
}

}  // namespace atf
