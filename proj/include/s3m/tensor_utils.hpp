// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <torch/torch.h>

#include "s3m/image.hpp"

namespace s3m {

/// H×W×C raster → float tensor [C, H, W].
torch::Tensor to_tensor(const ImageF& image);
/// Mask / label raster → tensor [H, W] of the given dtype.
torch::Tensor to_tensor(const Image<std::uint8_t>& image, torch::Dtype dtype);

/// [H, W] or [1, H, W] or [C, H, W] tensor → raster (copies to CPU float).
ImageF to_image(const torch::Tensor& tensor);
LabelMap to_label_map(const torch::Tensor& labels);

void require_shape(const torch::Tensor& t, c10::IntArrayRef expected, const char* what);

}  // namespace s3m
