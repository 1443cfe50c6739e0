// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Semantic consistency-guided weighting. A label map becomes a one-hot
// volume, is box-filtered per class, pushed through exp(-(2v-1)^2) and
// max-reduced over classes. The resulting weight is high near class
// boundaries (mixed windows) and e^-1 inside uniform regions. Both task
// losses are reweighted per pixel by (1 - alpha) + alpha * W.
//
// Label tensors are integer [B,H,W]; weight maps are [B,H,W].

#pragma once

#include <vector>

#include <torch/torch.h>

#include "s3m/config.hpp"

namespace s3m::scg {

/// [B,H,W] labels → [B,C,H,W] indicator volume in `dtype`; ignore pixels are all-zero.
/// Labels outside [0, C) other than `ignore` → Label error.
torch::Tensor one_hot_volume(const torch::Tensor& labels, int class_count, int ignore_label = 255,
                             torch::Dtype dtype = torch::kFloat32);

/// k×k stride-1 mean filter per channel with reflect padding.
/// Even k → Configuration error; k/2 ≥ H or W → Configuration error.
torch::Tensor inter_class_volume(const torch::Tensor& one_hot, int kernel);

/// exp(-(2v - 1)^2), elementwise.
torch::Tensor normalize_volume(const torch::Tensor& inter_class);

/// Channel-wise max of the normalized inter-class volume, [B,H,W].
torch::Tensor scg_weight_map(const torch::Tensor& labels, int class_count, int kernel, int ignore_label = 255,
                             torch::Dtype dtype = torch::kFloat32);

/// Mean over non-ignore pixels of -[(1-α) + α W] log softmax(logits)_y.
/// logits [B,C,H,W]; all pixels ignored → UndefinedLoss error.
torch::Tensor segmentation_loss(const torch::Tensor& logits, const torch::Tensor& labels, const torch::Tensor& weights,
                                double alpha, int ignore_label = 255);

/// Σ_i γ^(N-i) · mean over valid pixels of [(1-α) + α W] |gt - D_i|.
/// Maps are [B,1,H,W] or [B,H,W]; empty valid mask or empty sequence → UndefinedLoss error.
torch::Tensor stereo_loss(const std::vector<torch::Tensor>& sequence, const torch::Tensor& ground_truth,
                          const torch::Tensor& valid, const torch::Tensor& weights, double alpha, double gamma);

torch::Tensor total_loss(const torch::Tensor& segmentation, const torch::Tensor& stereo);

}  // namespace s3m::scg
