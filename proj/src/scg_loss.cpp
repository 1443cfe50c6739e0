// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/scg_loss.hpp"

#include <sstream>

#include "s3m/errors.hpp"

namespace s3m::scg {

namespace F = torch::nn::functional;
using torch::autograd::AutogradContext;
using torch::autograd::variable_list;

namespace {

torch::Tensor as_bhw(const torch::Tensor& t, const char* what) {
    if (t.dim() == 2) return t.unsqueeze(0);
    if (t.dim() == 4 && t.size(1) == 1) return t.squeeze(1);
    require(t.dim() == 3, ErrorKind::Dimension, std::string(what) + " must be [B,H,W]");
    return t;
}

torch::Tensor pixel_weights(const torch::Tensor& weights, double alpha) { return (1.0 - alpha) + alpha * weights; }

struct SegmentationLossFn : torch::autograd::Function<SegmentationLossFn> {
    static torch::Tensor forward(AutogradContext* ctx, const torch::Tensor& logits, const torch::Tensor& labels,
                                 const torch::Tensor& weights, double alpha, int64_t ignore_label) {
        auto keep = labels != ignore_label;
        const auto count = keep.sum().item<int64_t>();
        require(count > 0, ErrorKind::UndefinedLoss, "every pixel carries the ignore label");
        auto safe = labels.masked_fill(keep.logical_not(), 0).to(torch::kLong);
        auto log_prob = torch::log_softmax(logits, 1);
        auto nll = -log_prob.gather(1, safe.unsqueeze(1)).squeeze(1);
        auto coef = pixel_weights(weights.to(logits.scalar_type()), alpha) * keep.to(logits.scalar_type()) /
                    static_cast<double>(count);
        ctx->save_for_backward({log_prob, safe, coef});
        return (coef * nll).sum();
    }

    static variable_list backward(AutogradContext* ctx, variable_list grad_output) {
        const auto saved = ctx->get_saved_variables();
        const auto& log_prob = saved[0];
        const auto& safe = saved[1];
        const auto& coef = saved[2];
        // d/dz of -log softmax(z)_y = softmax(z) - e_y
        auto grad = log_prob.exp();
        grad.scatter_add_(1, safe.unsqueeze(1), -torch::ones_like(coef).unsqueeze(1));
        grad = grad * coef.unsqueeze(1) * grad_output[0];
        return {grad, torch::Tensor(), torch::Tensor(), torch::Tensor(), torch::Tensor()};
    }
};

struct StereoLossFn : torch::autograd::Function<StereoLossFn> {
    /// stacked: [N,B,H,W]
    static torch::Tensor forward(AutogradContext* ctx, const torch::Tensor& stacked, const torch::Tensor& ground_truth,
                                 const torch::Tensor& valid, const torch::Tensor& weights, double alpha, double gamma) {
        const auto count = valid.sum().item<int64_t>();
        require(count > 0, ErrorKind::UndefinedLoss, "no valid ground-truth disparity");
        const auto dtype = stacked.scalar_type();
        const int64_t n = stacked.size(0);
        auto decay = torch::pow(torch::full({n}, gamma, stacked.options()),
                                torch::arange(n - 1, -1, -1, stacked.options()));
        auto coef = pixel_weights(weights.to(dtype), alpha) * valid.to(dtype) / static_cast<double>(count);
        auto gt = ground_truth.to(dtype).masked_fill(valid.logical_not(), 0.0);
        auto residual = stacked - gt.unsqueeze(0);
        auto full_coef = decay.view({n, 1, 1, 1}) * coef.unsqueeze(0);
        ctx->save_for_backward({residual.sign(), full_coef});
        return (full_coef * residual.abs()).sum();
    }

    static variable_list backward(AutogradContext* ctx, variable_list grad_output) {
        const auto saved = ctx->get_saved_variables();
        auto grad = saved[0] * saved[1] * grad_output[0];
        return {grad, torch::Tensor(), torch::Tensor(), torch::Tensor(), torch::Tensor(), torch::Tensor()};
    }
};

}  // namespace

torch::Tensor one_hot_volume(const torch::Tensor& labels_in, int class_count, int ignore_label, torch::Dtype dtype) {
    require(class_count >= 1, ErrorKind::Configuration, "class count must be positive");
    auto labels = as_bhw(labels_in, "labels").to(torch::kLong);
    auto keep = labels != ignore_label;
    auto out_of_range = ((labels < 0) | (labels >= class_count)) & keep;
    if (out_of_range.any().item<bool>()) {
        std::ostringstream msg;
        msg << "label " << labels.masked_select(out_of_range)[0].item<int64_t>() << " outside [0, " << class_count
            << ") and not the ignore label " << ignore_label;
        fail(ErrorKind::Label, msg.str());
    }
    auto safe = labels.masked_fill(keep.logical_not(), 0);
    auto volume = torch::one_hot(safe, class_count).permute({0, 3, 1, 2}).to(dtype);
    return volume * keep.unsqueeze(1).to(dtype);
}

torch::Tensor inter_class_volume(const torch::Tensor& one_hot, int kernel) {
    require(kernel >= 1 && kernel % 2 == 1, ErrorKind::Configuration,
            "pool kernel must be odd and positive, got " + std::to_string(kernel));
    require(one_hot.dim() == 4, ErrorKind::Dimension, "one-hot volume must be [B,C,H,W]");
    const int pad = kernel / 2;
    if (pad == 0) return one_hot;
    require(pad < one_hot.size(2) && pad < one_hot.size(3), ErrorKind::Configuration,
            "label map too small for reflect padding with kernel " + std::to_string(kernel));
    auto padded = F::pad(one_hot, F::PadFuncOptions({pad, pad, pad, pad}).mode(torch::kReflect));
    return F::avg_pool2d(padded, F::AvgPool2dFuncOptions(kernel).stride(1));
}

torch::Tensor normalize_volume(const torch::Tensor& inter_class) {
    auto centered = 2.0 * inter_class - 1.0;
    return torch::exp(-centered * centered);
}

torch::Tensor scg_weight_map(const torch::Tensor& labels, int class_count, int kernel, int ignore_label,
                             torch::Dtype dtype) {
    auto volume = normalize_volume(inter_class_volume(one_hot_volume(labels, class_count, ignore_label, dtype), kernel));
    return std::get<0>(volume.max(1));
}

torch::Tensor segmentation_loss(const torch::Tensor& logits, const torch::Tensor& labels_in, const torch::Tensor& weights,
                                double alpha, int ignore_label) {
    require(logits.dim() == 4, ErrorKind::Dimension, "logits must be [B,C,H,W]");
    auto labels = as_bhw(labels_in, "labels").to(torch::kLong);
    auto w = as_bhw(weights, "weights");
    if (labels.sizes() != w.sizes() || labels.size(0) != logits.size(0) || labels.size(1) != logits.size(2) ||
        labels.size(2) != logits.size(3)) {
        std::ostringstream msg;
        msg << "segmentation loss shapes disagree: logits " << logits.sizes() << ", labels " << labels.sizes()
            << ", weights " << w.sizes();
        fail(ErrorKind::Dimension, msg.str());
    }
    auto keep = labels != ignore_label;
    auto bad = ((labels < 0) | (labels >= logits.size(1))) & keep;
    require(!bad.any().item<bool>(), ErrorKind::Label, "label outside the logit class range");
    return SegmentationLossFn::apply(logits, labels, w, alpha, static_cast<int64_t>(ignore_label));
}

torch::Tensor stereo_loss(const std::vector<torch::Tensor>& sequence, const torch::Tensor& ground_truth,
                          const torch::Tensor& valid, const torch::Tensor& weights, double alpha, double gamma) {
    require(!sequence.empty(), ErrorKind::UndefinedLoss, "empty disparity sequence");
    std::vector<torch::Tensor> maps;
    maps.reserve(sequence.size());
    for (const auto& d : sequence) maps.push_back(as_bhw(d, "disparity"));
    auto stacked = torch::stack(maps);
    auto gt = as_bhw(ground_truth, "ground truth");
    auto v = as_bhw(valid, "valid mask").to(torch::kBool);
    auto w = as_bhw(weights, "weights");
    if (gt.sizes() != maps.front().sizes() || v.sizes() != gt.sizes() || w.sizes() != gt.sizes()) {
        std::ostringstream msg;
        msg << "stereo loss shapes disagree: disparity " << maps.front().sizes() << ", ground truth " << gt.sizes()
            << ", valid " << v.sizes() << ", weights " << w.sizes();
        fail(ErrorKind::Dimension, msg.str());
    }
    return StereoLossFn::apply(stacked, gt, v, w, alpha, gamma);
}

torch::Tensor total_loss(const torch::Tensor& segmentation, const torch::Tensor& stereo) { return segmentation + stereo; }

}  // namespace s3m::scg
