// Copyright 2026 The ATF Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "atf/error.hpp"
#include "atf/tensor.hpp"

// Tensor archive: a JSON manifest plus one raw blob of little-endian float32
// values, tensors concatenated in manifest order.
//
//   weights.json                       weights.bin
//   {                                  [t0 bytes][t1 bytes]...
//     "format": "atf-tensor-archive",
//     "version": 1,
//     "blob": "weights.bin",
//     "tensors": [
//       {"name": ..., "dtype": "f32", "shape": [...], "offset": 0, "length": 24},
//       ...
//     ]
//   }
//
// The blob name is stored relative to the manifest's directory.

namespace atf {

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

using TensorList = std::vector<NamedTensor>;

inline constexpr const char* kArchiveFormat = "atf-tensor-archive";

namespace archive_detail {

inline std::uint32_t to_little(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    }
}

}  // namespace archive_detail

inline std::filesystem::path blob_path_for(const std::filesystem::path& manifest) {
    auto blob = manifest;
    blob.replace_extension(".bin");
    return blob;
}

inline void save_archive(const std::filesystem::path& manifest_path, const TensorList& tensors) {
    const auto blob_path = blob_path_for(manifest_path);
    if (blob_path == manifest_path) {
        throw PreconditionError("archive manifest must not use the .bin extension: " + manifest_path.string());
    }
    nlohmann::ordered_json manifest;
    manifest["format"] = kArchiveFormat;
    manifest["version"] = 1;
    manifest["blob"] = blob_path.filename().string();
    auto entries = nlohmann::ordered_json::array();

    std::ofstream blob(blob_path, std::ios::binary);
    if (!blob) {
        throw IoError("cannot write " + blob_path.string());
    }
    std::unordered_set<std::string> seen;
    std::uint64_t offset = 0;
    for (const auto& [name, tensor] : tensors) {
        if (!seen.insert(name).second) {
            throw PreconditionError("duplicate tensor name '" + name + "' in archive");
        }
        const std::uint64_t length = tensor.size() * sizeof(float);
        for (float v : tensor.data()) {
            const std::uint32_t word = archive_detail::to_little(std::bit_cast<std::uint32_t>(v));
            blob.write(reinterpret_cast<const char*>(&word), sizeof(word));
        }
        nlohmann::ordered_json entry;
        entry["name"] = name;
        entry["dtype"] = "f32";
        entry["shape"] = tensor.shape();
        entry["offset"] = offset;
        entry["length"] = length;
        entries.push_back(std::move(entry));
        offset += length;
    }
    if (!blob) {
        throw IoError("failed writing " + blob_path.string());
    }
    manifest["tensors"] = std::move(entries);

    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + manifest_path.string());
    }
    out << manifest.dump(2) << '\n';
}

inline TensorList load_archive(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open archive manifest " + manifest_path.string());
    }
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }

    const std::string where = manifest_path.string();
    TensorList result;
    try {
        if (manifest.at("format").get<std::string>() != kArchiveFormat) {
            throw FormatError(where + ": not a tensor archive manifest");
        }
        if (manifest.at("version").get<int>() != 1) {
            throw FormatError(where + ": unsupported archive version");
        }
        const auto blob_path = manifest_path.parent_path() / manifest.at("blob").get<std::string>();
        std::ifstream blob(blob_path, std::ios::binary | std::ios::ate);
        if (!blob) {
            throw InputError("cannot open archive blob " + blob_path.string());
        }
        const auto blob_size = static_cast<std::uint64_t>(blob.tellg());
        blob.seekg(0);

        std::uint64_t expected_offset = 0;
        for (const auto& entry : manifest.at("tensors")) {
            const auto name = entry.at("name").get<std::string>();
            if (entry.at("dtype").get<std::string>() != "f32") {
                throw FormatError(where + ": tensor '" + name + "' has unsupported dtype");
            }
            const auto shape = entry.at("shape").get<Shape>();
            const auto offset = entry.at("offset").get<std::uint64_t>();
            const auto length = entry.at("length").get<std::uint64_t>();
            if (shape.empty()) {
                throw FormatError(where + ": tensor '" + name + "' has empty shape");
            }
            for (std::size_t d : shape) {
                if (d == 0) {
                    throw FormatError(where + ": tensor '" + name + "' has a zero dimension");
                }
            }
            const std::uint64_t count = shape_elements(shape);
            if (length != count * sizeof(float)) {
                throw FormatError(where + ": tensor '" + name + "' length disagrees with shape");
            }
            if (offset != expected_offset) {
                throw FormatError(where + ": tensor '" + name + "' is not contiguous with its predecessor");
            }
            if (offset + length > blob_size) {
                throw FormatError(where + ": tensor '" + name + "' extends past the end of the blob");
            }
            std::vector<float> values(count);
            for (auto& v : values) {
                std::uint32_t word = 0;
                blob.read(reinterpret_cast<char*>(&word), sizeof(word));
                v = std::bit_cast<float>(archive_detail::to_little(word));
            }
            if (!blob) {
                throw FormatError(where + ": short read on tensor '" + name + "'");
            }
            expected_offset = offset + length;
            result.push_back({name, Tensor(shape, std::move(values))});
        }
        if (expected_offset != blob_size) {
            throw FormatError(where + ": blob has trailing bytes not described by the manifest");
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(where + ": " + e.what());
    }
    return result;
}

inline const Tensor& find_tensor(const TensorList& tensors, const std::string& name) {
    for (const auto& t : tensors) {
        if (t.name == name) {
            return t.tensor;
        }
    }
    throw FormatError("archive has no tensor named '" + name + "'");
}

}  // namespace atf
