// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/model.hpp"

#include "s3m/errors.hpp"

namespace s3m {

S3MNetImpl::S3MNetImpl(const ModelConfig& cfg, int classes) : config(cfg), class_count(classes) {
    require(cfg.width_multiplier > 0.0, ErrorKind::Configuration, "width multiplier must be positive");
    require(cfg.corr_levels >= 1 && cfg.corr_radius >= 0, ErrorKind::Configuration, "bad correlation settings");
    encoder = register_module("encoder", stereo::JointEncoder(cfg));
    refiner = register_module("refiner", stereo::RecurrentRefiner(cfg));
    fusion = register_module("fusion", semantic::FeatureFusion(cfg));
    decoder = register_module("decoder", semantic::DenseDecoder(cfg, classes));
}

std::pair<stereo::FeaturePyramid, stereo::FeaturePyramid> split_views(const stereo::FeaturePyramid& joint) {
    stereo::FeaturePyramid left, right;
    for (const auto& level : joint.levels) {
        auto halves = level.chunk(2, 0);
        left.levels.push_back(halves[0]);
        right.levels.push_back(halves[1]);
    }
    return {left, right};
}

ModelOutput S3MNetImpl::forward(const torch::Tensor& left, const torch::Tensor& right) {
    require(left.sizes() == right.sizes(), ErrorKind::Consistency, "left and right views differ in shape");
    auto [fl, fr] = split_views(encoder(torch::cat({left, right}, 0)));
    auto pyramid = stereo::correlate(fl.correlation_features(), fr.correlation_features(), config.corr_levels);
    ModelOutput out;
    out.disparity = refiner->forward(fl, pyramid, config.gru_iters, {left.size(2), left.size(3)});
    out.logits = decoder(fusion(fl, out.disparity.final()));
    return out;
}

std::vector<std::pair<std::string, std::vector<torch::Tensor>>> S3MNetImpl::parameter_groups() {
    std::vector<torch::Tensor> ffa;
    for (const auto& item : fusion->named_parameters())
        if (item.key().rfind("disparity_encoder.", 0) != 0) ffa.push_back(item.value());
    return {{"encoder", encoder->parameters()},
            {"refiner", refiner->parameters()},
            {"fusion", ffa},
            {"disparity_encoder", fusion->disparity_encoder->parameters()},
            {"decoder", decoder->parameters()}};
}

}  // namespace s3m
