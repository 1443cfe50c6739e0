// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Convolutional building blocks shared by both branches.

#pragma once

#include <torch/torch.h>

namespace s3m::layers {

enum class Norm { Instance, Batch, None };

struct NormLayerImpl : torch::nn::Module {
    NormLayerImpl(Norm kind, int64_t channels);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::InstanceNorm2d instance{nullptr};
    torch::nn::BatchNorm2d batch{nullptr};
};
TORCH_MODULE(NormLayer);

torch::nn::Conv2d conv(int64_t in, int64_t out, int64_t kernel, int64_t stride = 1, int64_t padding = -1,
                       bool bias = true);
torch::nn::Conv2d conv(int64_t in, int64_t out, std::array<int64_t, 2> kernel, std::array<int64_t, 2> padding);

/// conv → norm → ReLU.
struct ConvNormReluImpl : torch::nn::Module {
    ConvNormReluImpl(int64_t in, int64_t out, int64_t kernel, int64_t stride, Norm norm);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d conv{nullptr};
    NormLayer norm{nullptr};
};
TORCH_MODULE(ConvNormRelu);

/// Two 3×3 conv/norm/ReLU stages with a projected shortcut when the shape
/// changes; ReLU after the sum.
struct ResidualBlockImpl : torch::nn::Module {
    ResidualBlockImpl(int64_t in, int64_t out, int64_t stride, Norm norm);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
    NormLayer norm1{nullptr}, norm2{nullptr};
    torch::nn::Conv2d shortcut_conv{nullptr};
    NormLayer shortcut_norm{nullptr};
};
TORCH_MODULE(ResidualBlock);

/// ResNet basic block: conv-bn-relu-conv-bn, shortcut, ReLU.
struct BasicBlockImpl : torch::nn::Module {
    BasicBlockImpl(int64_t in, int64_t out, int64_t stride);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
    torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
    torch::nn::Conv2d shortcut_conv{nullptr};
    torch::nn::BatchNorm2d shortcut_bn{nullptr};
};
TORCH_MODULE(BasicBlock);

/// Bilinear resize of x to the spatial size of `like`.
torch::Tensor resize_like(const torch::Tensor& x, const torch::Tensor& like);

}  // namespace s3m::layers
