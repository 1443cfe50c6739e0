// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// The full two-branch network: a joint encoder feeds both the recurrent
// stereo refiner and, together with the final disparity estimate, the
// semantic fusion/decoder path.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "s3m/config.hpp"
#include "s3m/semantic_branch.hpp"
#include "s3m/stereo_branch.hpp"

namespace s3m {

struct ModelOutput {
    stereo::DisparitySequence disparity;
    torch::Tensor logits;  // [B,C,H,W]
};

struct S3MNetImpl : torch::nn::Module {
    S3MNetImpl(const ModelConfig& config, int class_count);

    /// left, right: [B,3,H,W] in [0,1], H and W divisible by 32.
    ModelOutput forward(const torch::Tensor& left, const torch::Tensor& right);

    /// Parameters grouped by role: "encoder", "refiner", "fusion", "disparity_encoder", "decoder".
    std::vector<std::pair<std::string, std::vector<torch::Tensor>>> parameter_groups();

    ModelConfig config;
    int class_count = 0;
    stereo::JointEncoder encoder{nullptr};
    stereo::RecurrentRefiner refiner{nullptr};
    semantic::FeatureFusion fusion{nullptr};
    semantic::DenseDecoder decoder{nullptr};
};
TORCH_MODULE(S3MNet);

/// Splits a pyramid computed on cat(left, right) along the batch axis.
std::pair<stereo::FeaturePyramid, stereo::FeaturePyramid> split_views(const stereo::FeaturePyramid& joint);

}  // namespace s3m
