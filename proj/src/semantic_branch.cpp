// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/semantic_branch.hpp"

#include <algorithm>
#include <sstream>

#include "s3m/errors.hpp"

namespace s3m::semantic {

namespace F = torch::nn::functional;

namespace {

int64_t fused_channels(const ModelConfig& config, int level) {
    return config.channels(kFusedBaseChannels.at(level));
}

torch::nn::Sequential residual_layer(int64_t in, int64_t out, int64_t stride) {
    torch::nn::Sequential layer;
    layer->push_back(layers::BasicBlock(in, out, stride));
    layer->push_back(layers::BasicBlock(out, out, 1));
    return layer;
}

torch::Tensor upsample2x(const torch::Tensor& x) {
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .scale_factor(std::vector<double>{2.0, 2.0})
                                 .mode(torch::kBilinear)
                                 .align_corners(true));
}

}  // namespace

RemapImpl::RemapImpl(const ModelConfig& config, int level) : shared_level(level) {
    const auto* it = std::find(kConsumedSharedLevels.begin(), kConsumedSharedLevels.end(), level);
    if (it == kConsumedSharedLevels.end())
        fail(ErrorKind::Contract, "remapping accepts shared levels F_1, F_3, F_5 only, got F_" + std::to_string(level + 1));
    const auto target = static_cast<int>(it - kConsumedSharedLevels.begin());
    body = register_module(
        "body", layers::ConvNormRelu(config.channels(stereo::kFeatureBaseChannels[level]),
                                     fused_channels(config, target), 3, 2, layers::Norm::Batch));
}

torch::Tensor RemapImpl::forward(const torch::Tensor& x) { return body(x); }

DisparityEncoderImpl::DisparityEncoderImpl(const ModelConfig& config) {
    const int64_t c0 = config.channels(64), c1 = config.channels(64), c2 = config.channels(128),
                  c3 = config.channels(256), c4 = config.channels(512);
    stem_conv = register_module("stem_conv", layers::conv(1, c0, 7, 2, 3, false));
    stem_bn = register_module("stem_bn", torch::nn::BatchNorm2d(c0));
    layer1 = register_module("layer1", residual_layer(c0, c1, 1));
    layer2 = register_module("layer2", residual_layer(c1, c2, 2));
    layer3 = register_module("layer3", residual_layer(c2, c3, 2));
    layer4 = register_module("layer4", residual_layer(c3, c4, 2));
    projections = register_module("projections", torch::nn::ModuleList());
    const std::array<int64_t, kFusedLevels> native{c0, c1, c2, c3, c4};
    for (int i = 0; i < kFusedLevels; ++i)
        projections->push_back(layers::conv(native[i], fused_channels(config, i), 1, 1, 0));
}

std::vector<torch::Tensor> DisparityEncoderImpl::forward(const torch::Tensor& disparity) {
    require(disparity.dim() == 4 && disparity.size(1) == 1, ErrorKind::Dimension, "disparity must be [B,1,H,W]");
    std::vector<torch::Tensor> taps;
    auto x = torch::relu(stem_bn(stem_conv(disparity)));
    taps.push_back(x);
    x = F::max_pool2d(x, F::MaxPool2dFuncOptions(3).stride(2).padding(1));
    x = layer1->forward(x);
    taps.push_back(x);
    x = layer2->forward(x);
    taps.push_back(x);
    x = layer3->forward(x);
    taps.push_back(x);
    x = layer4->forward(x);
    taps.push_back(x);
    for (int i = 0; i < kFusedLevels; ++i) taps[i] = projections[i]->as<torch::nn::Conv2d>()->forward(taps[i]);
    return taps;
}

torch::Tensor fuse_add(const torch::Tensor& a, const torch::Tensor& b) {
    if (a.sizes() != b.sizes()) {
        std::ostringstream msg;
        msg << "addition fusion needs equal shapes, got " << a.sizes() << " and " << b.sizes();
        fail(ErrorKind::Dimension, msg.str());
    }
    return a + b;
}

FuseImpl::FuseImpl(FusionStrategy kind, int64_t channels) : strategy(kind) {
    if (strategy == FusionStrategy::Concatenation)
        projection = register_module("projection", layers::conv(2 * channels, channels, 1, 1, 0));
}

torch::Tensor FuseImpl::forward(const torch::Tensor& a, const torch::Tensor& b) {
    if (strategy == FusionStrategy::Addition) return fuse_add(a, b);
    if (a.dim() != 4 || b.dim() != 4 || a.size(0) != b.size(0) || a.size(2) != b.size(2) || a.size(3) != b.size(3)) {
        std::ostringstream msg;
        msg << "concatenation fusion needs equal spatial extents, got " << a.sizes() << " and " << b.sizes();
        fail(ErrorKind::Dimension, msg.str());
    }
    require(a.size(1) + b.size(1) == projection->options.in_channels(), ErrorKind::Dimension,
            "concatenation fusion channel count does not match its projection");
    return projection(torch::cat({a, b}, 1));
}

FeatureFusionImpl::FeatureFusionImpl(const ModelConfig& cfg) : config(cfg) {
    for (std::size_t i = 0; i < kConsumedSharedLevels.size(); ++i)
        remaps.push_back(register_module("remap" + std::to_string(i + 1), Remap(cfg, kConsumedSharedLevels[i])));
    disparity_encoder = register_module("disparity_encoder", DisparityEncoder(cfg));
    for (int i = 0; i < kFusedLevels; ++i)
        fusers.push_back(register_module("fuse" + std::to_string(i + 1), Fuse(cfg.fusion, fused_channels(cfg, i))));
    for (int i = 3; i < kFusedLevels; ++i) {
        deep_encoders.push_back(register_module(
            "deep" + std::to_string(i + 1),
            layers::BasicBlock(fused_channels(cfg, i - 1), fused_channels(cfg, i), 2)));
        if (cfg.deep_input == DeepFusionInput::Literal)
            deep_input_fusers.push_back(register_module("deep_fuse" + std::to_string(i + 1),
                                                        Fuse(cfg.fusion, fused_channels(cfg, i - 1))));
    }
}

FusedPyramid FeatureFusionImpl::forward(const stereo::FeaturePyramid& shared, const torch::Tensor& disparity) {
    return fuse_features(shared, disparity_encoder(disparity));
}

FusedPyramid FeatureFusionImpl::fuse_features(const stereo::FeaturePyramid& shared,
                                              const std::vector<torch::Tensor>& disparity_features) {
    require(shared.levels.size() == stereo::kPyramidLevels, ErrorKind::Dimension, "shared pyramid needs 5 levels");
    require(disparity_features.size() == kFusedLevels, ErrorKind::Dimension, "disparity features need 5 levels");
    FusedPyramid out;
    torch::Tensor adapted;  // A_{i-1}, used by the pre-fusion reading
    for (int i = 0; i < kFusedLevels; ++i) {
        if (i < 3) {
            adapted = remaps[i](shared.levels[kConsumedSharedLevels[i]]);
        } else if (config.deep_input == DeepFusionInput::Literal) {
            auto input = deep_input_fusers[i - 3](out.levels[i - 1], disparity_features[i - 1]);
            adapted = deep_encoders[i - 3](input);
        } else {
            adapted = deep_encoders[i - 3](out.levels[i - 1]);
        }
        out.levels.push_back(fusers[i](adapted, disparity_features[i]));
    }
    return out;
}

DecoderBlockImpl::DecoderBlockImpl(int64_t in, int64_t out) {
    body = register_module("body", torch::nn::Sequential(layers::ConvNormRelu(in, out, 3, 1, layers::Norm::Batch),
                                                         layers::ConvNormRelu(out, out, 3, 1, layers::Norm::Batch),
                                                         layers::ConvNormRelu(out, out, 3, 1, layers::Norm::Batch)));
}

torch::Tensor DecoderBlockImpl::forward(const torch::Tensor& x) { return body->forward(x); }

UpsampleUnitImpl::UpsampleUnitImpl(int64_t in, int64_t out) {
    body = register_module("body", layers::ConvNormRelu(in, out, 3, 1, layers::Norm::Batch));
}

torch::Tensor UpsampleUnitImpl::forward(const torch::Tensor& x) { return body(upsample2x(x)); }

DenseDecoderImpl::DenseDecoderImpl(const ModelConfig& config, int classes) : class_count(classes) {
    require(classes >= 2, ErrorKind::Configuration, "decoder needs at least 2 classes");
    for (int j = 1; j < kFusedLevels; ++j) {
        for (int i = 0; i + j < kFusedLevels; ++i) {
            const int64_t c = fused_channels(config, i);
            const std::string tag = std::to_string(i) + "_" + std::to_string(j);
            node_index.push_back({i, j});
            ups.push_back(register_module("up" + tag, UpsampleUnit(fused_channels(config, i + 1), c)));
            nodes.push_back(register_module("node" + tag, DecoderBlock((j + 1) * c, c)));
        }
    }
    classifier = register_module("classifier", layers::conv(fused_channels(config, 0), classes, 3));
}

torch::Tensor DenseDecoderImpl::forward(const FusedPyramid& fused) {
    require(fused.levels.size() == kFusedLevels, ErrorKind::Dimension, "decoder needs 5 fused levels");
    // grid[i][j] = node (i, j); column 0 holds the fused inputs.
    std::vector<std::vector<torch::Tensor>> grid(kFusedLevels);
    for (int i = 0; i < kFusedLevels; ++i) grid[i].push_back(fused.levels[i]);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        const auto [i, j] = node_index[n];
        std::vector<torch::Tensor> inputs(grid[i].begin(), grid[i].begin() + j);
        inputs.push_back(ups[n](grid[i + 1][j - 1]));
        grid[i].push_back(nodes[n](torch::cat(inputs, 1)));
    }
    return classifier(upsample2x(grid[0].back()));
}

}  // namespace s3m::semantic
