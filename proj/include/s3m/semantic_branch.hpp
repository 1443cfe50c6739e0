// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Semantic half of the network: feature fusion adaptation (remapping shared
// features, encoding the final disparity map, fusing) and the densely
// connected skip decoder that emits per-pixel class logits.

#pragma once

#include <array>
#include <vector>

#include <torch/torch.h>

#include "s3m/config.hpp"
#include "s3m/layers.hpp"
#include "s3m/stereo_branch.hpp"

namespace s3m::semantic {

inline constexpr int kFusedLevels = 5;
inline constexpr std::array<int, kFusedLevels> kFusedStrides{2, 4, 8, 16, 32};
inline constexpr std::array<int, kFusedLevels> kFusedBaseChannels{64, 256, 512, 1024, 2048};
/// Shared-encoder levels (0-based) remapped into the first three fused levels.
inline constexpr std::array<int, 3> kConsumedSharedLevels{0, 2, 4};

struct FusedPyramid {
    std::vector<torch::Tensor> levels;
};

/// Stride-2 3×3 conv + BN + ReLU taking a shared level into semantic space.
struct RemapImpl : torch::nn::Module {
    /// shared_level is 0-based and must be one of kConsumedSharedLevels.
    RemapImpl(const ModelConfig& config, int shared_level);
    torch::Tensor forward(const torch::Tensor& x);

    int shared_level = 0;
    layers::ConvNormRelu body{nullptr};
};
TORCH_MODULE(Remap);

/// 18-layer residual encoder over the single-channel disparity map with 1×1
/// projections onto the fused channel widths.
struct DisparityEncoderImpl : torch::nn::Module {
    explicit DisparityEncoderImpl(const ModelConfig& config);
    /// disparity: [B,1,H,W] → 5 maps matching the fused pyramid.
    std::vector<torch::Tensor> forward(const torch::Tensor& disparity);

    torch::nn::Conv2d stem_conv{nullptr};
    torch::nn::BatchNorm2d stem_bn{nullptr};
    torch::nn::Sequential layer1{nullptr}, layer2{nullptr}, layer3{nullptr}, layer4{nullptr};
    torch::nn::ModuleList projections{nullptr};
};
TORCH_MODULE(DisparityEncoder);

/// Fusion operator. Concatenation owns a 1×1 projection back to a's width.
struct FuseImpl : torch::nn::Module {
    FuseImpl(FusionStrategy strategy, int64_t channels);
    torch::Tensor forward(const torch::Tensor& a, const torch::Tensor& b);

    FusionStrategy strategy;
    torch::nn::Conv2d projection{nullptr};
};
TORCH_MODULE(Fuse);

/// Stateless addition fusion; channel mismatch → Dimension error.
torch::Tensor fuse_add(const torch::Tensor& a, const torch::Tensor& b);

struct FeatureFusionImpl : torch::nn::Module {
    explicit FeatureFusionImpl(const ModelConfig& config);

    FusedPyramid forward(const stereo::FeaturePyramid& shared, const torch::Tensor& disparity);
    /// Same as forward with the disparity features supplied by the caller.
    FusedPyramid fuse_features(const stereo::FeaturePyramid& shared, const std::vector<torch::Tensor>& disparity_features);

    ModelConfig config;
    std::vector<Remap> remaps;
    DisparityEncoder disparity_encoder{nullptr};
    std::vector<layers::BasicBlock> deep_encoders;  // fused levels 4 and 5
    std::vector<Fuse> fusers;                       // one per fused level
    std::vector<Fuse> deep_input_fusers;            // levels 4 and 5, literal reading only
};
TORCH_MODULE(FeatureFusion);

/// Three 3×3 conv/BN/ReLU stages.
struct DecoderBlockImpl : torch::nn::Module {
    DecoderBlockImpl(int64_t in, int64_t out);
    torch::Tensor forward(const torch::Tensor& x);
    torch::nn::Sequential body{nullptr};
};
TORCH_MODULE(DecoderBlock);

/// Bilinear ×2 then 3×3 conv/BN/ReLU.
struct UpsampleUnitImpl : torch::nn::Module {
    UpsampleUnitImpl(int64_t in, int64_t out);
    torch::Tensor forward(const torch::Tensor& x);
    layers::ConvNormRelu body{nullptr};
};
TORCH_MODULE(UpsampleUnit);

/// Nested dense decoder. Node (i, j) at fused level i, column j ≥ 1 takes
/// every node (i, 0..j-1) plus the upsampled node (i+1, j-1).
struct DenseDecoderImpl : torch::nn::Module {
    DenseDecoderImpl(const ModelConfig& config, int class_count);
    /// Returns [B,C,2·H1,2·W1] logits where H1×W1 is the first fused level.
    torch::Tensor forward(const FusedPyramid& fused);

    /// Number of decoder nodes (i, j), j ≥ 1.
    [[nodiscard]] std::size_t node_count() const { return nodes.size(); }

    int class_count = 0;
    std::vector<std::array<int, 2>> node_index;  // (level, column) in evaluation order
    std::vector<DecoderBlock> nodes;
    std::vector<UpsampleUnit> ups;
    torch::nn::Conv2d classifier{nullptr};
};
TORCH_MODULE(DenseDecoder);

}  // namespace s3m::semantic
