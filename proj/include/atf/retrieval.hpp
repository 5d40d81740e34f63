// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "atf/archive.hpp"
#include "atf/vit.hpp"

namespace atf {

struct RetrievalSet {
    std::vector<EmbeddingVector> gallery;
    std::vector<EmbeddingVector> queries;
    std::vector<std::size_t> truth;  // truth[q] is the gallery index matching query q

    void validate() const {
        if (gallery.empty() || queries.empty()) {
            throw PreconditionError("retrieval: gallery and queries must be non-empty");
        }
        if (truth.size() != queries.size()) {
            throw PreconditionError("retrieval: one truth index per query required");
        }
        const std::size_t dim = gallery.front().values.size();
        for (const auto* list : {&gallery, &queries}) {
            for (const auto& e : *list) {
                if (e.values.size() != dim) {
                    throw ShapeError("retrieval: embeddings have different dimensions");
                }
            }
        }
        for (std::size_t t : truth) {
            if (t >= gallery.size()) {
                throw PreconditionError("retrieval: truth index " + std::to_string(t) + " out of range");
            }
        }
    }
};

// Cosine similarity in double; zero vectors compare as 0.
inline double cosine_similarity(const Tensor& a, const Tensor& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += static_cast<double>(a[i]) * b[i];
        aa += static_cast<double>(a[i]) * a[i];
        bb += static_cast<double>(b[i]) * b[i];
    }
    if (aa == 0.0 || bb == 0.0) {
        return 0.0;
    }
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

// 0-based rank of the truth item for one query: gallery items scoring higher,
// plus equal-scoring items with a lower index.
inline std::size_t truth_rank(const RetrievalSet& set, std::size_t query) {
    const Tensor& q = set.queries[query].values;
    const std::size_t truth = set.truth[query];
    const double target = cosine_similarity(q, set.gallery[truth].values);
    std::size_t rank = 0;
    for (std::size_t g = 0; g < set.gallery.size(); ++g) {
        if (g == truth) {
            continue;
        }
        const double s = cosine_similarity(q, set.gallery[g].values);
        if (s > target || (s == target && g < truth)) {
            ++rank;
        }
    }
    return rank;
}

inline double recall_at_k(const RetrievalSet& set, std::size_t k) {
    if (k == 0) {
        throw PreconditionError("recall_at_k: K must be at least 1");
    }
    set.validate();
    std::size_t hits = 0;
    for (std::size_t q = 0; q < set.queries.size(); ++q) {
        hits += truth_rank(set, q) < k ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(set.queries.size());
}

// Rows of every tensor in archive order: a 1-D tensor is one embedding, a
// 2-D tensor contributes one embedding per row.
inline std::vector<EmbeddingVector> embeddings_from_tensors(const TensorList& tensors) {
    std::vector<EmbeddingVector> out;
    for (const auto& [name, t] : tensors) {
        if (t.rank() == 1) {
            out.push_back({t});
        } else if (t.rank() == 2) {
            for (std::size_t r = 0; r < t.dim(0); ++r) {
                const auto row = t.row(r);
                out.push_back({Tensor::vector(std::vector<float>(row.begin(), row.end()))});
            }
        } else {
            throw FormatError("embedding tensor '" + name + "' must be 1-D or 2-D");
        }
    }
    return out;
}

inline void save_embedding(const std::filesystem::path& path, const EmbeddingVector& e) {
    save_archive(path, {{"embedding", e.values}});
}

// Truth file: one gallery index per line, line q for query q. Blank lines and
// lines starting with '#' are skipped.
inline std::vector<std::size_t> load_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open truth file " + path.string());
    }
    std::vector<std::size_t> truth;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (line.find_first_not_of("0123456789") != std::string::npos || line.size() > 12) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected a gallery index");
        }
        truth.push_back(std::stoull(line));
    }
    return truth;
}

}  // namespace atf
