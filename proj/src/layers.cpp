// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/layers.hpp"

namespace s3m::layers {

namespace F = torch::nn::functional;

NormLayerImpl::NormLayerImpl(Norm kind, int64_t channels) {
    if (kind == Norm::Instance)
        instance = register_module("instance", torch::nn::InstanceNorm2d(torch::nn::InstanceNorm2dOptions(channels)));
    else if (kind == Norm::Batch)
        batch = register_module("batch", torch::nn::BatchNorm2d(channels));
}

torch::Tensor NormLayerImpl::forward(const torch::Tensor& x) {
    if (instance) return instance->forward(x);
    if (batch) return batch->forward(x);
    return x;
}

torch::nn::Conv2d conv(int64_t in, int64_t out, int64_t kernel, int64_t stride, int64_t padding, bool bias) {
    if (padding < 0) padding = kernel / 2;
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(bias));
}

torch::nn::Conv2d conv(int64_t in, int64_t out, std::array<int64_t, 2> kernel, std::array<int64_t, 2> padding) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, {kernel[0], kernel[1]}).padding({padding[0], padding[1]}));
}

ConvNormReluImpl::ConvNormReluImpl(int64_t in, int64_t out, int64_t kernel, int64_t stride, Norm norm_kind) {
    conv = register_module("conv", layers::conv(in, out, kernel, stride, -1, norm_kind == Norm::None));
    norm = register_module("norm", NormLayer(norm_kind, out));
}

torch::Tensor ConvNormReluImpl::forward(const torch::Tensor& x) { return torch::relu(norm(conv(x))); }

ResidualBlockImpl::ResidualBlockImpl(int64_t in, int64_t out, int64_t stride, Norm norm) {
    conv1 = register_module("conv1", conv(in, out, 3, stride));
    conv2 = register_module("conv2", conv(out, out, 3));
    norm1 = register_module("norm1", NormLayer(norm, out));
    norm2 = register_module("norm2", NormLayer(norm, out));
    if (stride != 1 || in != out) {
        shortcut_conv = register_module("shortcut_conv", conv(in, out, 1, stride, 0));
        shortcut_norm = register_module("shortcut_norm", NormLayer(norm, out));
    }
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
    auto y = torch::relu(norm1(conv1(x)));
    y = torch::relu(norm2(conv2(y)));
    auto skip = shortcut_conv ? shortcut_norm(shortcut_conv(x)) : x;
    return torch::relu(skip + y);
}

BasicBlockImpl::BasicBlockImpl(int64_t in, int64_t out, int64_t stride) {
    conv1 = register_module("conv1", conv(in, out, 3, stride, 1, false));
    bn1 = register_module("bn1", torch::nn::BatchNorm2d(out));
    conv2 = register_module("conv2", conv(out, out, 3, 1, 1, false));
    bn2 = register_module("bn2", torch::nn::BatchNorm2d(out));
    if (stride != 1 || in != out) {
        shortcut_conv = register_module("shortcut_conv", conv(in, out, 1, stride, 0, false));
        shortcut_bn = register_module("shortcut_bn", torch::nn::BatchNorm2d(out));
    }
}

torch::Tensor BasicBlockImpl::forward(const torch::Tensor& x) {
    auto y = torch::relu(bn1(conv1(x)));
    y = bn2(conv2(y));
    auto skip = shortcut_conv ? shortcut_bn(shortcut_conv(x)) : x;
    return torch::relu(skip + y);
}

torch::Tensor resize_like(const torch::Tensor& x, const torch::Tensor& like) {
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .size(std::vector<int64_t>{like.size(2), like.size(3)})
                                 .mode(torch::kBilinear)
                                 .align_corners(true));
}

}  // namespace s3m::layers
