// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "atf/filtering.hpp"
#include "atf/retrieval.hpp"

namespace atf {

enum class Variant { baseline, atf, atf_no_srt };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::baseline: return "baseline";
        case Variant::atf: return "atf";
        case Variant::atf_no_srt: return "atf_no_srt";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s) {
    if (s == "baseline") {
        return Variant::baseline;
    }
    if (s == "atf") {
        return Variant::atf;
    }
    if (s == "atf_no_srt" || s == "atf-no-srt") {
        return Variant::atf_no_srt;
    }
    throw PreconditionError("unknown variant '" + s + "' (baseline, atf or atf_no_srt)");
}

// Images plus optional detector inputs and retrieval queries.
//
// On disk:
//   <dir>/images/<name>.pgm|.ppm   model-sized input images, loaded in name order
//   <dir>/masks/<name>.pgm         ground-truth detector masks
//   <dir>/scores/<name>.json       score-map archives
//   <dir>/queries.json             optional query embeddings (tensor archive)
//   <dir>/truth.txt                gallery index per query, required with queries.json
struct Dataset {
    std::vector<std::string> names;
    std::vector<ImageU8> images;
    std::vector<DetectorAux> aux;
    std::vector<EmbeddingVector> queries;
    std::vector<std::size_t> truth;

    std::size_t size() const { return images.size(); }
};

inline Dataset load_dataset(const std::filesystem::path& dir, DetectorKind kind) {
    namespace fs = std::filesystem;
    const fs::path image_dir = dir / "images";
    if (!fs::is_directory(image_dir)) {
        throw InputError("dataset " + dir.string() + " has no images/ directory");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(image_dir)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw InputError("dataset " + dir.string() + " has no .pgm/.ppm images");
    }
    Dataset ds;
    for (const auto& f : files) {
        const std::string stem = f.stem().string();
        std::optional<fs::path> aux_path;
        if (kind == DetectorKind::ground_truth) {
            aux_path = dir / "masks" / (stem + ".pgm");
        } else if (kind == DetectorKind::score_map) {
            aux_path = dir / "scores" / (stem + ".json");
        }
        if (aux_path && !fs::exists(*aux_path)) {
            throw InputError("dataset is missing detector input " + aux_path->string());
        }
        ds.names.push_back(stem);
        ds.images.push_back(read_netpbm(f));
        ds.aux.push_back(load_detector_aux(kind, aux_path));
    }
    if (fs::exists(dir / "queries.json")) {
        ds.queries = embeddings_from_tensors(load_archive(dir / "queries.json"));
        ds.truth = load_truth(dir / "truth.txt");
    }
    return ds;
}

struct BenchOptions {
    std::vector<Variant> variants{Variant::baseline, Variant::atf};
    std::size_t repetitions = 5;
    DetectorSpec detector;
    std::optional<MaskVector> static_mask;
    // Use baseline embeddings as queries (query i matches image i) when the
    // dataset carries no queries of its own.
    bool self_queries = false;
};

struct BenchRow {
    std::string variant;
    std::optional<std::array<double, 3>> recall;  // @1, @5, @10
    double detector_ms = 0.0;
    double encoder_ms = 0.0;
    double total_ms = 0.0;
    double tokens_per_image = 0.0;
    std::vector<std::size_t> tokens;  // per image
    std::vector<EmbeddingVector> embeddings;
};

struct BenchReport {
    std::size_t images = 0;
    std::size_t full_tokens = 0;
    std::size_t repetitions = 0;
    std::vector<BenchRow> rows;

    const BenchRow& row(const std::string& variant) const {
        for (const auto& r : rows) {
            if (r.variant == variant) {
                return r;
            }
        }
        throw PreconditionError("report has no row '" + variant + "'");
    }
};

inline double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

namespace bench_detail {

struct Run {
    EmbeddingVector embedding;
    std::size_t tokens = 0;
    double detector_ms = 0.0;
    double encoder_ms = 0.0;
};

inline Run run_once(Variant variant, const ImageU8& image, const DetectorAux& aux, const ModelWeights& weights,
                    const VitConfig& config, const BenchOptions& options, const MaskVector& no_static) {
    if (variant == Variant::baseline) {
        Run run;
        const auto start = std::chrono::steady_clock::now();
        run.embedding = encode(tokenize(image, weights, config), weights, config);
        run.encoder_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        run.tokens = config.tokens();
        return run;
    }
    const MaskVector& s = variant == Variant::atf ? *options.static_mask : no_static;
    AtfResult r = atf_embed(image, weights, config, s, options.detector, aux);
    return {std::move(r.embedding), r.stats.tokens_after, r.stats.detector_ms, r.stats.encoder_ms};
}

}  // namespace bench_detail

// Times every variant on every image. Each image gets one untimed warm-up run,
// then `repetitions` timed runs whose detector and encoder times are reduced
// by median; report times are means of those medians over images.
inline BenchReport bench_run(const Dataset& dataset, const ModelWeights& weights, const VitConfig& config,
                             const BenchOptions& options) {
    if (dataset.size() == 0) {
        throw InputError("bench: dataset is empty");
    }
    if (options.variants.empty()) {
        throw PreconditionError("bench: no variants requested");
    }
    if (options.repetitions == 0) {
        throw PreconditionError("bench: repetitions must be at least 1");
    }
    const bool needs_static = std::find(options.variants.begin(), options.variants.end(), Variant::atf) !=
                              options.variants.end();
    if (needs_static && !options.static_mask) {
        throw InputError("bench: the atf variant needs a calibrated static mask");
    }
    if (options.static_mask && options.static_mask->size() != config.tokens()) {
        throw ShapeError("bench: static mask length does not match the model's token count");
    }

    std::vector<EmbeddingVector> queries = dataset.queries;
    std::vector<std::size_t> truth = dataset.truth;
    if (queries.empty() && options.self_queries) {
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            queries.push_back(encode(tokenize(dataset.images[i], weights, config), weights, config));
            truth.push_back(i);
        }
    }

    const MaskVector no_static(config.tokens());
    BenchReport report{dataset.size(), config.tokens(), options.repetitions, {}};
    for (Variant variant : options.variants) {
        BenchRow row;
        row.variant = to_string(variant);
        double det_sum = 0.0, enc_sum = 0.0;
        std::size_t token_sum = 0;
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            auto once = [&] {
                try {
                    return bench_detail::run_once(variant, dataset.images[i], dataset.aux[i], weights, config,
                                                  options, no_static);
                } catch (const EmptyResultError& e) {
                    throw EmptyResultError("bench: variant " + row.variant + " on image '" + dataset.names[i] +
                                           "': " + e.what());
                }
            };
            bench_detail::Run last = once();  // warm-up
            std::vector<double> det, enc;
            for (std::size_t rep = 0; rep < options.repetitions; ++rep) {
                last = once();
                det.push_back(last.detector_ms);
                enc.push_back(last.encoder_ms);
            }
            det_sum += median(det);
            enc_sum += median(enc);
            token_sum += last.tokens;
            row.tokens.push_back(last.tokens);
            row.embeddings.push_back(std::move(last.embedding));
        }
        const double n = static_cast<double>(dataset.size());
        row.detector_ms = det_sum / n;
        row.encoder_ms = enc_sum / n;
        row.total_ms = row.detector_ms + row.encoder_ms;
        row.tokens_per_image = static_cast<double>(token_sum) / n;
        if (!queries.empty()) {
            const RetrievalSet set{row.embeddings, queries, truth};
            row.recall = std::array<double, 3>{recall_at_k(set, 1), recall_at_k(set, 5), recall_at_k(set, 10)};
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

inline BenchReport bench_run(const std::filesystem::path& dataset_dir, const ModelWeights& weights,
                             const VitConfig& config, const BenchOptions& options) {
    return bench_run(load_dataset(dataset_dir, options.detector.kind), weights, config, options);
}

inline nlohmann::ordered_json report_to_json(const BenchReport& report) {
    nlohmann::ordered_json j;
    j["images"] = report.images;
    j["full_tokens"] = report.full_tokens;
    j["repetitions"] = report.repetitions;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row;
        row["variant"] = r.variant;
        if (r.recall) {
            row["recall_at_1"] = (*r.recall)[0];
            row["recall_at_5"] = (*r.recall)[1];
            row["recall_at_10"] = (*r.recall)[2];
        } else {
            row["recall_at_1"] = nullptr;
            row["recall_at_5"] = nullptr;
            row["recall_at_10"] = nullptr;
        }
        row["detector_ms"] = r.detector_ms;
        row["encoder_ms"] = r.encoder_ms;
        row["total_ms"] = r.total_ms;
        row["tokens_per_image"] = r.tokens_per_image;
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j;
}

// Plain-text table: recall columns, time as "total (detector + encoder)", tokens.
inline std::string format_report_table(const BenchReport& report) {
    auto pct = [](const std::optional<std::array<double, 3>>& r, int i) -> std::string {
        if (!r) {
            return "-";
        }
        char buf[32];
        const double v = i < 3 ? (*r)[i] : ((*r)[0] + (*r)[1] + (*r)[2]) / 3.0;
        std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * v);
        return buf;
    };
    std::vector<std::array<std::string, 7>> cells;
    cells.push_back({"Method", "R@1", "R@5", "R@10", "Avg.", "Time [ms/image]", "# of tokens"});
    for (const auto& r : report.rows) {
        char time[96];
        std::snprintf(time, sizeof time, "%.2f (%.2f + %.2f)", r.total_ms, r.detector_ms, r.encoder_ms);
        char tokens[32];
        std::snprintf(tokens, sizeof tokens, "%.1f", r.tokens_per_image);
        cells.push_back({r.variant, pct(r.recall, 0), pct(r.recall, 1), pct(r.recall, 2), pct(r.recall, 3), time,
                         tokens});
    }
    std::array<std::size_t, 7> width{};
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            width[c] = std::max(width[c], line[c].size());
        }
    }
    std::ostringstream out;
    auto emit = [&](const std::array<std::string, 7>& line) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (c == 1 || c == 5 || c == 6) {
                out << " | ";
            } else if (c > 0) {
                out << ' ';
            }
            const std::size_t pad = width[c] - line[c].size();
            if (c == 0) {
                out << line[c] << std::string(pad, ' ');
            } else {
                out << std::string(pad, ' ') << line[c];
            }
        }
        out << '\n';
    };
    emit(cells.front());
    std::size_t rule = 0;
    for (std::size_t w : width) {
        rule += w + 1;
    }
    out << std::string(rule + 4, '-') << '\n';
    for (std::size_t i = 1; i < cells.size(); ++i) {
        emit(cells[i]);
    }
    return out.str();
}

inline void write_report(const std::filesystem::path& path, const BenchReport& report) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << report_to_json(report).dump(2) << '\n';
}

}  // namespace atf
