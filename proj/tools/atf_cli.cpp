// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "atf/atf.hpp"

namespace fs = std::filesystem;

namespace {

// Image files directly in `dir`, or in `dir/images` when that exists.
std::vector<fs::path> list_images(const fs::path& dir) {
    const fs::path root = fs::is_directory(dir / "images") ? dir / "images" : dir;
    if (!fs::is_directory(root)) {
        throw atf::InputError("not a directory: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw atf::InputError("no .pgm/.ppm images under " + root.string());
    }
    return files;
}

std::vector<atf::ImageU8> read_images(const std::vector<fs::path>& files) {
    std::vector<atf::ImageU8> images;
    images.reserve(files.size());
    for (const auto& f : files) {
        images.push_back(atf::read_netpbm(f));
    }
    return images;
}

// Seeded Fisher-Yates prefix; keeps every file when count >= files.size().
std::vector<fs::path> sample_files(std::vector<fs::path> files, std::size_t count, std::uint64_t seed) {
    if (count >= files.size()) {
        return files;
    }
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (files.size() - i));
        std::swap(files[i], files[j]);
    }
    files.resize(count);
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<std::size_t> parse_k_list(const std::vector<std::size_t>& ks) {
    if (ks.empty()) {
        return {1, 5, 10};
    }
    return ks;
}

struct ModelArgs {
    std::string config;
    std::string weights;

    void add(CLI::App* cmd) {
        cmd->add_option("--config", config, "Model config (JSON)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--weights", weights, "Weight archive manifest")->required()->check(CLI::ExistingFile);
    }
};

struct DetectorArgs {
    std::string kind = "luminance";
    double threshold = atf::kDefaultDetectionThreshold;
    std::size_t dilation = atf::kDefaultDilationRadius;

    void add(CLI::App* cmd) {
        cmd->add_option("--detector", kind, "Object detector")
            ->check(CLI::IsMember({"ground-truth", "luminance", "score-map"}));
        cmd->add_option("--threshold", threshold, "Detection threshold in [0,1]")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--dilation", dilation, "Dilation radius in pixels");
    }

    atf::DetectorSpec spec() const { return {atf::parse_detector_kind(kind), threshold, dilation}; }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Token filtering for vision transformer image encoders"};
    app.require_subcommand(1);

    // init-model
    auto* init = app.add_subcommand("init-model", "Write seeded random weights for a config");
    std::string init_config, init_out;
    std::uint64_t init_seed = 0;
    init->add_option("--config", init_config, "Model config (JSON)")->required()->check(CLI::ExistingFile);
    init->add_option("--out", init_out, "Output weight archive manifest (.json)")->required();
    init->add_option("--seed", init_seed, "Initialization seed");

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "Derive the static-region mask from sample images");
    ModelArgs cal_model;
    cal_model.add(calibrate);
    std::string cal_samples, cal_out;
    std::size_t cal_count = atf::kDefaultCalibrationSamples;
    std::uint64_t cal_seed = 0;
    calibrate->add_option("--samples", cal_samples, "Directory of sample images")->required();
    calibrate->add_option("--count", cal_count, "Number of images drawn at random from the directory");
    calibrate->add_option("--seed", cal_seed, "Sampling seed");
    calibrate->add_option("--out", cal_out, "Output mask file")->required();

    // profile
    auto* profile = app.add_subcommand("profile", "Attention-rate heat map over an image set");
    ModelArgs prof_model;
    prof_model.add(profile);
    std::string prof_images, prof_out;
    profile->add_option("--images", prof_images, "Directory of images")->required();
    profile->add_option("--out", prof_out, "Output heat map (PGM)")->required();

    // embed
    auto* embed = app.add_subcommand("embed", "Embed one image, with token filtering when a static mask is given");
    ModelArgs emb_model;
    emb_model.add(embed);
    DetectorArgs emb_det;
    emb_det.add(embed);
    std::string emb_image, emb_out, emb_mask, emb_aux;
    embed->add_option("--image", emb_image, "Input image (PGM/PPM)")->required()->check(CLI::ExistingFile);
    embed->add_option("--out", emb_out, "Output embedding archive manifest (.json)")->required();
    embed->add_option("--static-mask", emb_mask, "Static-region mask; enables filtering")->check(CLI::ExistingFile);
    embed->add_option("--aux", emb_aux, "Detector input (PGM mask or score-map archive)");

    // bench
    auto* bench = app.add_subcommand("bench", "Time baseline and filtered variants over a dataset");
    ModelArgs bench_model;
    bench_model.add(bench);
    DetectorArgs bench_det;
    bench_det.add(bench);
    std::string bench_dataset, bench_out, bench_mask;
    std::vector<std::string> bench_variants{"baseline", "atf"};
    std::size_t bench_reps = 5;
    bool bench_self_queries = false;
    bench->add_option("--dataset", bench_dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    bench->add_option("--static-mask", bench_mask, "Static-region mask")->check(CLI::ExistingFile);
    bench->add_option("--variants", bench_variants, "Comma-separated: baseline, atf, atf_no_srt")->delimiter(',');
    bench->add_option("--reps", bench_reps, "Timed repetitions per image")->check(CLI::PositiveNumber);
    bench->add_option("--out", bench_out, "Report file (JSON); the table goes next to it as .txt");
    bench->add_flag("--self-queries", bench_self_queries,
                    "Without dataset queries, score recall against baseline embeddings");

    // eval-retrieval
    auto* eval = app.add_subcommand("eval-retrieval", "Recall@K of query embeddings against a gallery");
    std::vector<std::string> eval_gallery;
    std::string eval_queries, eval_truth, eval_out;
    std::vector<std::size_t> eval_k;
    eval->add_option("--gallery", eval_gallery, "Gallery embedding archive(s), in order")->required();
    eval->add_option("--queries", eval_queries, "Query embedding archive")->required()->check(CLI::ExistingFile);
    eval->add_option("--truth", eval_truth, "Truth file, one gallery index per query")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--k", eval_k, "Cutoffs (default 1,5,10)")->delimiter(',');
    eval->add_option("--out", eval_out, "Optional JSON result file");

    // synth-data
    auto* synth = app.add_subcommand("synth-data", "Write a synthetic dataset with ground-truth masks");
    std::string synth_config, synth_out;
    std::size_t synth_count = 16;
    std::uint64_t synth_seed = 0;
    synth->add_option("--config", synth_config, "Model config (JSON)")->required()->check(CLI::ExistingFile);
    synth->add_option("--out", synth_out, "Output dataset directory")->required();
    synth->add_option("--count", synth_count, "Number of images")->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_seed, "Generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*init) {
            const auto config = atf::load_config(init_config);
            atf::save_weights(init_out, atf::init_weights(config, init_seed));
            std::cout << "wrote " << init_out << " (" << config.tokens() << " tokens, d=" << config.d_model
                      << ", L=" << config.layers << ")\n";
        } else if (*calibrate) {
            const auto config = atf::load_config(cal_model.config);
            const auto weights = atf::load_weights(cal_model.weights, config);
            const auto files = sample_files(list_images(cal_samples), cal_count, cal_seed);
            const auto images = read_images(files);
            const auto mask = atf::static_region_mask(images, weights, config);
            atf::save_mask(cal_out, mask);
            std::cout << "calibrated on " << images.size() << " images: " << mask.popcount() << " of " << mask.size()
                      << " tokens are static\n";
        } else if (*profile) {
            const auto config = atf::load_config(prof_model.config);
            const auto weights = atf::load_weights(prof_model.weights, config);
            const auto images = read_images(list_images(prof_images));
            const auto map = atf::attention_rate(images, weights, config);
            atf::export_heatmap(map, config.grid(), prof_out);
            std::cout << "wrote " << prof_out << " (" << config.grid().height << "x" << config.grid().width
                      << ", " << images.size() << " images)\n";
        } else if (*embed) {
            const auto config = atf::load_config(emb_model.config);
            const auto weights = atf::load_weights(emb_model.weights, config);
            const auto image = atf::read_netpbm(emb_image);
            if (emb_mask.empty()) {
                atf::save_embedding(emb_out, atf::encode(atf::tokenize(image, weights, config), weights, config));
                std::cout << "embedded with all " << config.tokens() << " tokens\n";
            } else {
                const auto spec = emb_det.spec();
                const auto mask = atf::load_mask(emb_mask, config.tokens());
                const auto aux = atf::load_detector_aux(
                    spec.kind, emb_aux.empty() ? std::nullopt : std::optional<fs::path>(emb_aux));
                const auto result = atf::atf_embed(image, weights, config, mask, spec, aux);
                atf::save_embedding(emb_out, result.embedding);
                std::cout << "embedded with " << result.stats.tokens_after << " of " << result.stats.tokens_before
                          << " tokens\n";
            }
        } else if (*bench) {
            const auto config = atf::load_config(bench_model.config);
            const auto weights = atf::load_weights(bench_model.weights, config);
            atf::BenchOptions options;
            options.variants.clear();
            for (const auto& v : bench_variants) {
                options.variants.push_back(atf::parse_variant(v));
            }
            options.repetitions = bench_reps;
            options.detector = bench_det.spec();
            options.self_queries = bench_self_queries;
            if (!bench_mask.empty()) {
                options.static_mask = atf::load_mask(bench_mask, config.tokens());
            }
            const auto report = atf::bench_run(fs::path(bench_dataset), weights, config, options);
            const std::string table = atf::format_report_table(report);
            std::cout << table;
            if (!bench_out.empty()) {
                atf::write_report(bench_out, report);
                std::ofstream(fs::path(bench_out).replace_extension(".txt")) << table;
            }
        } else if (*eval) {
            atf::RetrievalSet set;
            for (const auto& g : eval_gallery) {
                auto part = atf::embeddings_from_tensors(atf::load_archive(g));
                set.gallery.insert(set.gallery.end(), part.begin(), part.end());
            }
            set.queries = atf::embeddings_from_tensors(atf::load_archive(eval_queries));
            set.truth = atf::load_truth(eval_truth);
            nlohmann::ordered_json result;
            for (std::size_t k : parse_k_list(eval_k)) {
                const double r = atf::recall_at_k(set, k);
                std::printf("Recall@%zu = %.4f\n", k, r);
                result["recall_at_" + std::to_string(k)] = r;
            }
            if (!eval_out.empty()) {
                std::ofstream(eval_out) << result.dump(2) << '\n';
            }
        } else if (*synth) {
            const auto config = atf::load_config(synth_config);
            const fs::path root(synth_out);
            fs::create_directories(root / "images");
            fs::create_directories(root / "masks");
            std::mt19937_64 rng(synth_seed);
            const char* ext = config.channels == 1 ? ".pgm" : ".ppm";
            for (std::size_t i = 0; i < synth_count; ++i) {
                const auto sample = atf::synthetic::random_sample(config, rng);
                char name[32];
                std::snprintf(name, sizeof name, "%05zu", i);
                atf::write_netpbm(root / "images" / (std::string(name) + ext), sample.image);
                atf::write_netpbm(root / "masks" / (std::string(name) + ".pgm"),
                                  atf::pixel_mask_to_image(sample.objects));
            }
            std::cout << "wrote " << synth_count << " images to " << root.string() << "\n";
        }
    } catch (const atf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
