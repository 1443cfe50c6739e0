// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Stereo half of the network: the joint (shared) encoder, the all-pairs
// row correlation volume with its disparity-axis pyramid, windowed lookup,
// and the three-resolution recurrent refiner with convex upsampling.
//
// Tensors are NCHW. Correlation volumes are [B, H', W', W'_k].

#pragma once

#include <array>
#include <vector>

#include <torch/torch.h>

#include "s3m/config.hpp"
#include "s3m/layers.hpp"

namespace s3m::stereo {

inline constexpr int kPyramidLevels = 5;
inline constexpr std::array<int, kPyramidLevels> kFeatureStrides{1, 1, 2, 4, 4};
inline constexpr std::array<int, kPyramidLevels> kFeatureBaseChannels{32, 48, 64, 96, 256};
inline constexpr int kCorrelationStride = 4;
inline constexpr int kHiddenBaseChannels = 128;

/// F_1..F_5; the last level is the correlation feature map.
struct FeaturePyramid {
    std::vector<torch::Tensor> levels;

    [[nodiscard]] const torch::Tensor& correlation_features() const { return levels.back(); }
};

struct CorrelationPyramid {
    std::vector<torch::Tensor> volumes;  // C_1..C_m
    int64_t width = 0;                   // unpadded W' (columns of the left feature map)

    [[nodiscard]] int levels() const { return static_cast<int>(volumes.size()); }
};

struct DisparitySequence {
    torch::Tensor initial;             // D_0, zeros [B,1,H,W]
    std::vector<torch::Tensor> maps;   // D_1..D_N, each [B,1,H,W]
    std::vector<torch::Tensor> upsample_weights;  // per iteration [B,9,f,f,H',W'], sums to 1 over dim 1

    [[nodiscard]] const torch::Tensor& final() const { return maps.back(); }
};

/// C_1(b,i,j,k) = <F_L(b,:,i,j), F_R(b,:,i,k)>. No normalization.
torch::Tensor build_correlation_volume(const torch::Tensor& left, const torch::Tensor& right);

/// Repeated kernel-2 / stride-2 averaging along the last axis.
CorrelationPyramid build_correlation_pyramid(const torch::Tensor& c1, int levels);

/// Pads the feature width to a multiple of 2^(levels-1), correlates, and builds the pyramid.
CorrelationPyramid correlate(const torch::Tensor& left, const torch::Tensor& right, int levels);

/// For every pixel and level k, linear samples of C_k at (j - d)/2^(k-1) + δ, δ ∈ [-r, r],
/// clamped to the valid column range. Output [B, levels*(2r+1), H', W'] (level-major).
torch::Tensor lookup_correlation(const CorrelationPyramid& pyramid, const torch::Tensor& disparity, int radius);

/// Softmax-normalized 3×3 convex weights from raw mask logits [B, 9*f*f, H, W].
torch::Tensor convex_weights(const torch::Tensor& mask_logits, int factor);

/// Full-resolution disparity [B,1,fH,fW] as convex combinations of f·coarse over 3×3 neighborhoods.
torch::Tensor convex_upsample(const torch::Tensor& coarse, const torch::Tensor& weights, int factor);

struct JointEncoderImpl : torch::nn::Module {
    explicit JointEncoderImpl(const ModelConfig& config);

    /// image: [B,3,H,W] in [0,1], H and W divisible by 32.
    FeaturePyramid forward(const torch::Tensor& image);

    layers::ConvNormRelu stem{nullptr};
    layers::ResidualBlock block1{nullptr}, block2{nullptr}, block3{nullptr}, block4{nullptr}, block5{nullptr};
    torch::nn::Conv2d head{nullptr};
};
TORCH_MODULE(JointEncoder);

/// Convolutional GRU run as a horizontal (1×5) then vertical (5×1) pass.
struct SepConvGruImpl : torch::nn::Module {
    SepConvGruImpl(int64_t hidden, int64_t input);

    /// context: {cz, cr, cq} biases, each [B,hidden,H,W].
    torch::Tensor forward(const torch::Tensor& h, const std::array<torch::Tensor, 3>& context, const torch::Tensor& x);

    torch::nn::Conv2d convz1{nullptr}, convr1{nullptr}, convq1{nullptr};
    torch::nn::Conv2d convz2{nullptr}, convr2{nullptr}, convq2{nullptr};
};
TORCH_MODULE(SepConvGru);

struct MotionEncoderImpl : torch::nn::Module {
    MotionEncoderImpl(int64_t corr_channels, int64_t width, int64_t out);
    torch::Tensor forward(const torch::Tensor& disparity, const torch::Tensor& corr);

    torch::nn::Conv2d convc1{nullptr}, convc2{nullptr}, convd1{nullptr}, convd2{nullptr}, conv{nullptr};
};
TORCH_MODULE(MotionEncoder);

struct RecurrentRefinerImpl : torch::nn::Module {
    explicit RecurrentRefinerImpl(const ModelConfig& config);

    /// `left` supplies context (levels 4 and 5 are used); output maps have extent full_size.
    DisparitySequence forward(const FeaturePyramid& left, const CorrelationPyramid& pyramid, int iters,
                              std::array<int64_t, 2> full_size);

    /// Zeroes the GRUs, motion encoder and heads so every step leaves the estimate unchanged.
    void zero_update_head();

    ModelConfig config;
    int64_t hidden = 0;
    // Context: stride 4, 8, 16.
    torch::nn::Conv2d context4{nullptr};
    layers::ResidualBlock context8{nullptr}, context16{nullptr};
    torch::nn::Conv2d hidden_init4{nullptr}, hidden_init8{nullptr}, hidden_init16{nullptr};
    torch::nn::Conv2d zrq4{nullptr}, zrq8{nullptr}, zrq16{nullptr};
    SepConvGru gru4{nullptr}, gru8{nullptr}, gru16{nullptr};
    MotionEncoder motion{nullptr};
    torch::nn::Conv2d delta1{nullptr}, delta2{nullptr};
    torch::nn::Conv2d mask1{nullptr}, mask2{nullptr};
};
TORCH_MODULE(RecurrentRefiner);

}  // namespace s3m::stereo
