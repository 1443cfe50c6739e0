// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// On-disk stereo sample format.
//
//   <root>/manifest.json
//   <root>/<id>/left.png      8-bit RGB
//   <root>/<id>/right.png     8-bit RGB
//   <root>/<id>/disp.png      16-bit gray, value = round(d * 256), 0 = invalid
//   <root>/<id>/labels.png    8-bit gray class IDs, 255 = ignore
//   <root>/<id>/occlusion.png optional 8-bit gray, 255 = occluded in the right view

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "s3m/image.hpp"

namespace s3m::dataio {

inline constexpr std::uint8_t kIgnoreLabel = 255;
inline constexpr double kDisparityScale = 256.0;

struct StereoSample {
    ImageF left;              // H×W×3 in [0,1]
    ImageF right;             // H×W×3 in [0,1]
    ImageF disparity;         // H×W, pixels
    Mask disparity_valid;     // H×W, 0/1
    LabelMap labels;          // H×W, class IDs or kIgnoreLabel
    std::optional<Mask> occlusion;  // H×W, 1 where the left pixel is hidden in the right view
    int class_count = 2;

    [[nodiscard]] int height() const noexcept { return left.height(); }
    [[nodiscard]] int width() const noexcept { return left.width(); }
};

/// Throws Consistency/Label/Range errors if any sample invariant is violated.
/// Disparities above `max_disparity` on valid pixels are rejected.
void validate(const StereoSample& sample, double max_disparity = 65535.0 / kDisparityScale);

Image<std::uint16_t> encode_disparity_16bit(const ImageF& disparity, const Mask& valid);
std::pair<ImageF, Mask> decode_disparity_16bit(const Image<std::uint16_t>& raw);

struct ClassInfo {
    std::string name;
    std::array<std::uint8_t, 3> color{};
};

struct Manifest {
    int class_count = 2;
    std::vector<ClassInfo> classes;
    std::map<std::string, std::vector<std::string>> splits;
    std::map<std::string, std::uint64_t> sample_seeds;
    std::string generator;  // free-form text describing how the data was produced

    [[nodiscard]] const std::vector<std::string>& split(const std::string& name) const;
};

Manifest load_manifest(const std::filesystem::path& root);
void save_manifest(const std::filesystem::path& root, const Manifest& manifest);

StereoSample load_sample(const std::filesystem::path& root, const std::string& sample_id);
StereoSample load_sample(const std::filesystem::path& root, const std::string& sample_id, const Manifest& manifest);
void save_sample(const std::filesystem::path& root, const std::string& sample_id, const StereoSample& sample);

// Raster conversions shared by the CLI and the inference path.
ImageF to_float_rgb(const Image<std::uint8_t>& rgb);
Image<std::uint8_t> to_u8_rgb(const ImageF& rgb);

ImageF load_rgb(const std::filesystem::path& path);

}  // namespace s3m::dataio
