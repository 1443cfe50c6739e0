// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: flat `section.key = value` text. Every key is
// registered; unknown keys are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "s3m/synthgen.hpp"

namespace s3m {

enum class FusionStrategy { Addition, Concatenation };

/// Which tensor the stride-2 semantic encoder consumes for the deep fused levels.
/// Literal: previous fused level plus the previous disparity features, as the
/// adaptation recurrence is written. PreFusion: the previous fused level alone.
enum class DeepFusionInput { Literal, PreFusion };

struct ModelConfig {
    double width_multiplier = 1.0;
    int corr_levels = 4;
    int corr_radius = 4;
    int gru_iters = 8;
    FusionStrategy fusion = FusionStrategy::Addition;
    DeepFusionInput deep_input = DeepFusionInput::Literal;

    /// round(base * width_multiplier), at least 1.
    [[nodiscard]] int channels(int base) const;
};

struct LossConfig {
    double alpha = 0.1;
    double gamma = 0.9;
    int pool_kernel = 3;
    int ignore_label = 255;
};

struct TrainConfig {
    ModelConfig model;
    LossConfig loss;
    int steps = 100000;
    double learning_rate = 2e-4;
    double epsilon = 1e-8;
    double weight_decay = 1e-5;
    int batch_size = 1;
    int crop_height = 320;
    int crop_width = 1024;
    double max_disparity = 192.0;
    std::uint64_t seed = 0;
    bool deterministic = true;
    int checkpoint_every = 1000;
    int log_every = 1;
    bool warmdown = false;     // linear decay of the learning rate to zero over the run
    double brightness = 0.1;   // additive jitter amplitude, shared by both views
    double contrast = 0.1;     // multiplicative jitter amplitude, shared by both views
    double grad_clip = 1.0;    // global L2 norm clip; <= 0 disables
};

struct ExperimentConfig {
    synthgen::SceneConfig scene;
    TrainConfig train;
};

/// Throws ErrorKind::Configuration on violated invariants.
void validate(const TrainConfig& config);

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

/// Applies one `key = value` assignment. Unknown key → Usage error, bad value → Configuration error.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

ExperimentConfig config_from_text(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text with every key, round-trips exactly through config_from_text.
std::string to_text(const ExperimentConfig& config);

std::vector<std::string> config_keys();

namespace presets {
/// w=1/8, 8 scenes of 128×64, crop 128×64, 8 refinement iterations, 5000 steps.
ExperimentConfig desk();
/// Full-width architecture with the published optimizer recipe.
ExperimentConfig full();
}  // namespace presets

std::string to_string(FusionStrategy strategy);
std::string to_string(DeepFusionInput input);

}  // namespace s3m
