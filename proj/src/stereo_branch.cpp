// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/stereo_branch.hpp"

#include <sstream>

#include "s3m/errors.hpp"

namespace s3m::stereo {

namespace F = torch::nn::functional;

torch::Tensor build_correlation_volume(const torch::Tensor& left, const torch::Tensor& right) {
    if (left.dim() != 4 || left.sizes() != right.sizes()) {
        std::ostringstream msg;
        msg << "correlation features must be matching [B,C,H,W], got " << left.sizes() << " and " << right.sizes();
        fail(ErrorKind::Dimension, msg.str());
    }
    // [B,H,W,C] x [B,H,C,W] -> [B,H,W,W]
    return torch::matmul(left.permute({0, 2, 3, 1}), right.permute({0, 2, 1, 3}));
}

CorrelationPyramid build_correlation_pyramid(const torch::Tensor& c1, int levels) {
    require(c1.dim() == 4, ErrorKind::Dimension, "correlation volume must be [B,H,W,W]");
    require(levels >= 1, ErrorKind::Configuration, "pyramid needs at least one level");
    const int64_t divisor = int64_t{1} << (levels - 1);
    require(c1.size(3) % divisor == 0, ErrorKind::Configuration,
            "last axis " + std::to_string(c1.size(3)) + " not divisible by " + std::to_string(divisor));
    CorrelationPyramid pyramid;
    pyramid.width = c1.size(2);
    pyramid.volumes.push_back(c1);
    for (int k = 1; k < levels; ++k) {
        const auto& prev = pyramid.volumes.back();
        auto sizes = prev.sizes().vec();
        sizes.back() /= 2;
        sizes.push_back(2);
        pyramid.volumes.push_back(prev.reshape(sizes).mean(-1));
    }
    return pyramid;
}

CorrelationPyramid correlate(const torch::Tensor& left, const torch::Tensor& right, int levels) {
    const int64_t divisor = int64_t{1} << (levels - 1);
    const int64_t width = left.size(3);
    const int64_t pad = (divisor - width % divisor) % divisor;
    auto l = pad ? F::pad(left, F::PadFuncOptions({0, pad})) : left;
    auto r = pad ? F::pad(right, F::PadFuncOptions({0, pad})) : right;
    auto pyramid = build_correlation_pyramid(build_correlation_volume(l, r), levels);
    pyramid.width = width;
    return pyramid;
}

torch::Tensor lookup_correlation(const CorrelationPyramid& pyramid, const torch::Tensor& disparity, int radius) {
    require(!pyramid.volumes.empty(), ErrorKind::Dimension, "empty correlation pyramid");
    const auto& c1 = pyramid.volumes.front();
    const int64_t B = c1.size(0), H = c1.size(1), W = pyramid.width;
    auto d = disparity.dim() == 4 ? disparity.squeeze(1) : disparity;
    require(d.dim() == 3 && d.size(0) == B && d.size(1) == H && d.size(2) == W, ErrorKind::Dimension,
            "disparity does not match correlation grid");

    const auto opts = c1.options();
    auto columns = torch::arange(W, opts).view({1, 1, W, 1});
    auto offsets = torch::arange(-radius, radius + 1, opts).view({1, 1, 1, 2 * radius + 1});
    auto target = columns - d.unsqueeze(-1).to(c1.scalar_type());  // [B,H,W,1]

    std::vector<torch::Tensor> samples;
    for (int k = 0; k < pyramid.levels(); ++k) {
        auto volume = pyramid.volumes[k].narrow(2, 0, W);  // crop padded left columns
        const int64_t wk = volume.size(3);
        const double scale = 1.0 / static_cast<double>(int64_t{1} << k);
        auto x = (target * scale + offsets).clamp(0.0, static_cast<double>(wk - 1));
        auto x0 = x.floor();
        auto t = x - x0;
        auto i0 = x0.to(torch::kLong);
        auto i1 = (i0 + 1).clamp_max(wk - 1);
        auto v0 = volume.gather(3, i0);
        auto v1 = volume.gather(3, i1);
        samples.push_back(((1.0 - t) * v0 + t * v1).permute({0, 3, 1, 2}));
    }
    return torch::cat(samples, 1).contiguous();
}

torch::Tensor convex_weights(const torch::Tensor& mask_logits, int factor) {
    const int64_t B = mask_logits.size(0), H = mask_logits.size(2), W = mask_logits.size(3);
    require(mask_logits.size(1) == 9 * factor * factor, ErrorKind::Dimension, "mask needs 9*f*f channels");
    return torch::softmax(mask_logits.view({B, 9, factor, factor, H, W}), 1);
}

torch::Tensor convex_upsample(const torch::Tensor& coarse, const torch::Tensor& weights, int factor) {
    const int64_t B = coarse.size(0), H = coarse.size(2), W = coarse.size(3);
    auto patches = F::unfold(coarse * static_cast<double>(factor), F::UnfoldFuncOptions({3, 3}).padding(1));
    patches = patches.view({B, 9, 1, 1, H, W});
    auto up = (weights * patches).sum(1);  // [B,f,f,H,W]
    return up.permute({0, 3, 1, 4, 2}).reshape({B, 1, H * factor, W * factor});
}

// ---------------------------------------------------------------------------

JointEncoderImpl::JointEncoderImpl(const ModelConfig& config) {
    std::array<int64_t, kPyramidLevels> c{};
    for (int i = 0; i < kPyramidLevels; ++i) c[i] = config.channels(kFeatureBaseChannels[i]);
    using layers::Norm;
    stem = register_module("stem", layers::ConvNormRelu(3, c[0], 3, 1, Norm::Instance));
    block1 = register_module("block1", layers::ResidualBlock(c[0], c[0], 1, Norm::Instance));
    block2 = register_module("block2", layers::ResidualBlock(c[0], c[1], 1, Norm::Instance));
    block3 = register_module("block3", layers::ResidualBlock(c[1], c[2], 2, Norm::Instance));
    block4 = register_module("block4", layers::ResidualBlock(c[2], c[3], 2, Norm::Instance));
    block5 = register_module("block5", layers::ResidualBlock(c[3], c[3], 1, Norm::Instance));
    head = register_module("head", layers::conv(c[3], c[4], 1, 1, 0));
}

FeaturePyramid JointEncoderImpl::forward(const torch::Tensor& image) {
    if (image.dim() != 4 || image.size(1) != 3 || image.size(2) % 32 != 0 || image.size(3) % 32 != 0) {
        std::ostringstream msg;
        msg << "encoder input must be [B,3,H,W] with H, W divisible by 32, got " << image.sizes();
        fail(ErrorKind::Dimension, msg.str());
    }
    FeaturePyramid p;
    auto x = 2.0 * image - 1.0;
    auto f1 = block1(stem(x));
    auto f2 = block2(f1);
    auto f3 = block3(f2);
    auto f4 = block4(f3);
    auto f5 = head(block5(f4));
    p.levels = {f1, f2, f3, f4, f5};
    return p;
}

SepConvGruImpl::SepConvGruImpl(int64_t hidden, int64_t input) {
    const int64_t in = hidden + input;
    convz1 = register_module("convz1", layers::conv(in, hidden, {1, 5}, {0, 2}));
    convr1 = register_module("convr1", layers::conv(in, hidden, {1, 5}, {0, 2}));
    convq1 = register_module("convq1", layers::conv(in, hidden, {1, 5}, {0, 2}));
    convz2 = register_module("convz2", layers::conv(in, hidden, {5, 1}, {2, 0}));
    convr2 = register_module("convr2", layers::conv(in, hidden, {5, 1}, {2, 0}));
    convq2 = register_module("convq2", layers::conv(in, hidden, {5, 1}, {2, 0}));
}

torch::Tensor SepConvGruImpl::forward(const torch::Tensor& h_in, const std::array<torch::Tensor, 3>& context,
                                      const torch::Tensor& x) {
    const auto& [cz, cr, cq] = context;
    auto h = h_in;
    auto pass = [&](torch::nn::Conv2d& cz_conv, torch::nn::Conv2d& cr_conv, torch::nn::Conv2d& cq_conv) {
        auto hx = torch::cat({h, x}, 1);
        auto z = torch::sigmoid(cz_conv(hx) + cz);
        auto r = torch::sigmoid(cr_conv(hx) + cr);
        auto q = torch::tanh(cq_conv(torch::cat({r * h, x}, 1)) + cq);
        h = (1.0 - z) * h + z * q;
    };
    pass(convz1, convr1, convq1);
    pass(convz2, convr2, convq2);
    return h;
}

MotionEncoderImpl::MotionEncoderImpl(int64_t corr_channels, int64_t width, int64_t out) {
    convc1 = register_module("convc1", layers::conv(corr_channels, width, 1, 1, 0));
    convc2 = register_module("convc2", layers::conv(width, width, 3));
    convd1 = register_module("convd1", layers::conv(1, width, 7));
    convd2 = register_module("convd2", layers::conv(width, width, 3));
    conv = register_module("conv", layers::conv(2 * width, out - 1, 3));
}

torch::Tensor MotionEncoderImpl::forward(const torch::Tensor& disparity, const torch::Tensor& corr) {
    auto c = torch::relu(convc2(torch::relu(convc1(corr))));
    auto d = torch::relu(convd2(torch::relu(convd1(disparity))));
    auto m = torch::relu(conv(torch::cat({c, d}, 1)));
    return torch::cat({m, disparity}, 1);
}

RecurrentRefinerImpl::RecurrentRefinerImpl(const ModelConfig& cfg) : config(cfg) {
    hidden = cfg.channels(kHiddenBaseChannels);
    const int64_t f4 = cfg.channels(kFeatureBaseChannels[3]);
    const int64_t f5 = cfg.channels(kFeatureBaseChannels[4]);
    const int64_t corr_channels = static_cast<int64_t>(cfg.corr_levels) * (2 * cfg.corr_radius + 1);
    const int64_t motion_width = cfg.channels(64);
    const int64_t motion_out = cfg.channels(128);
    const int64_t head_width = cfg.channels(256);
    constexpr int64_t kFactor = kCorrelationStride;

    context4 = register_module("context4", layers::conv(f4 + f5, hidden, 3));
    context8 = register_module("context8", layers::ResidualBlock(hidden, hidden, 2, layers::Norm::None));
    context16 = register_module("context16", layers::ResidualBlock(hidden, hidden, 2, layers::Norm::None));
    hidden_init4 = register_module("hidden_init4", layers::conv(hidden, hidden, 3));
    hidden_init8 = register_module("hidden_init8", layers::conv(hidden, hidden, 3));
    hidden_init16 = register_module("hidden_init16", layers::conv(hidden, hidden, 3));
    zrq4 = register_module("zrq4", layers::conv(hidden, 3 * hidden, 3));
    zrq8 = register_module("zrq8", layers::conv(hidden, 3 * hidden, 3));
    zrq16 = register_module("zrq16", layers::conv(hidden, 3 * hidden, 3));

    gru16 = register_module("gru16", SepConvGru(hidden, hidden));
    gru8 = register_module("gru8", SepConvGru(hidden, 2 * hidden));
    gru4 = register_module("gru4", SepConvGru(hidden, motion_out + hidden));
    motion = register_module("motion", MotionEncoder(corr_channels, motion_width, motion_out));
    delta1 = register_module("delta1", layers::conv(hidden, head_width, 3));
    delta2 = register_module("delta2", layers::conv(head_width, 1, 3));
    mask1 = register_module("mask1", layers::conv(hidden, head_width, 3));
    mask2 = register_module("mask2", layers::conv(head_width, 9 * kFactor * kFactor, 1, 1, 0));
}

void RecurrentRefinerImpl::zero_update_head() {
    torch::NoGradGuard no_grad;
    for (auto* module : std::initializer_list<torch::nn::Module*>{gru4.get(), gru8.get(), gru16.get(), motion.get(),
                                                                 delta1.get(), delta2.get(), mask1.get(), mask2.get()})
        for (auto& p : module->parameters()) p.zero_();
}

DisparitySequence RecurrentRefinerImpl::forward(const FeaturePyramid& left, const CorrelationPyramid& pyramid,
                                                int iters, std::array<int64_t, 2> full_size) {
    require(iters >= 1, ErrorKind::Configuration, "refinement needs at least one iteration");
    constexpr int kFactor = kCorrelationStride;
    const auto& f4 = left.levels.at(3);
    const auto& f5 = left.levels.at(4);

    auto base4 = torch::relu(context4(torch::cat({f4, f5}, 1)));
    auto base8 = context8(base4);
    auto base16 = context16(base8);
    auto h4 = torch::tanh(hidden_init4(base4));
    auto h8 = torch::tanh(hidden_init8(base8));
    auto h16 = torch::tanh(hidden_init16(base16));
    auto split = [](const torch::Tensor& zrq) {
        auto parts = zrq.chunk(3, 1);
        return std::array<torch::Tensor, 3>{parts[0], parts[1], parts[2]};
    };
    const auto ctx4 = split(zrq4(torch::relu(base4)));
    const auto ctx8 = split(zrq8(torch::relu(base8)));
    const auto ctx16 = split(zrq16(torch::relu(base16)));
    auto pool2x = [](const torch::Tensor& x) {
        return F::avg_pool2d(x, F::AvgPool2dFuncOptions(3).stride(2).padding(1));
    };

    DisparitySequence seq;
    auto d = torch::zeros({f4.size(0), 1, f4.size(2), f4.size(3)}, f4.options());
    seq.initial = torch::zeros({f4.size(0), 1, full_size[0], full_size[1]}, f4.options());
    for (int it = 0; it < iters; ++it) {
        d = d.detach();
        auto corr = lookup_correlation(pyramid, d, config.corr_radius);
        h16 = gru16(h16, ctx16, pool2x(h8));
        h8 = gru8(h8, ctx8, torch::cat({pool2x(h4), layers::resize_like(h16, h8)}, 1));
        auto motion_features = motion(d, corr);
        h4 = gru4(h4, ctx4, torch::cat({motion_features, layers::resize_like(h8, h4)}, 1));
        d = d + delta2(torch::relu(delta1(h4)));
        auto weights = convex_weights(0.25 * mask2(torch::relu(mask1(h4))), kFactor);
        auto full = convex_upsample(d, weights, kFactor);
        if (full.size(2) != full_size[0] || full.size(3) != full_size[1])
            full = full.narrow(2, 0, full_size[0]).narrow(3, 0, full_size[1]);
        seq.maps.push_back(full);
        seq.upsample_weights.push_back(weights);
    }
    return seq;
}

}  // namespace s3m::stereo
