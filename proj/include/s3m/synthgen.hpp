// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Procedural rectified stereo scenes: a textured background plane plus K
// fronto-parallel textured rectangles. Ground truth is exact by construction.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "s3m/dataio.hpp"

namespace s3m::synthgen {

struct SceneConfig {
    int width = 128;
    int height = 64;
    int layer_count = 3;
    double disparity_min = 4.0;
    double disparity_max = 16.0;
    double background_disparity = 2.0;
    double texture_noise_amplitude = 0.4;
    int class_palette_size = 5;
    std::uint64_t seed = 0;
    bool subpixel = false;
    int val_samples = 0;  // trailing samples of a generated dataset assigned to the "val" split
};

/// Throws ErrorKind::Configuration when the config cannot produce a valid scene.
void validate(const SceneConfig& config);

struct Layer {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // left-view footprint, half-open
    double disparity = 0.0;
    int class_id = 0;
};

struct Scene {
    dataio::StereoSample sample;  // occlusion mask always populated
    std::vector<Layer> layers;    // ordered far to near (strictly increasing disparity)
};

Scene generate_scene(const SceneConfig& config);

/// Fixed class colors shared by the generator and the label plots.
std::array<std::uint8_t, 3> class_color(int class_id);

/// Seed of the i-th sample in a dataset with the given top-level seed.
std::uint64_t sample_seed(std::uint64_t dataset_seed, int index);

std::string sample_id(int index);

dataio::Manifest generate_dataset(const SceneConfig& config, int sample_count, const std::filesystem::path& out_root);

}  // namespace s3m::synthgen
