// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/tensor_utils.hpp"

#include <sstream>

namespace s3m {

torch::Tensor to_tensor(const ImageF& image) {
    auto hwc = torch::from_blob(const_cast<float*>(image.data().data()),
                                {image.height(), image.width(), image.channels()}, torch::kFloat32);
    return hwc.permute({2, 0, 1}).contiguous();
}

torch::Tensor to_tensor(const Image<std::uint8_t>& image, torch::Dtype dtype) {
    require(image.channels() == 1, ErrorKind::Dimension, "expected single-channel raster");
    auto hw = torch::from_blob(const_cast<std::uint8_t*>(image.data().data()), {image.height(), image.width()},
                               torch::kUInt8);
    return hw.to(dtype);
}

ImageF to_image(const torch::Tensor& tensor) {
    auto t = tensor.detach().to(torch::kCPU, torch::kFloat32);
    if (t.dim() == 2) t = t.unsqueeze(0);
    require(t.dim() == 3, ErrorKind::Dimension, "to_image expects [H,W] or [C,H,W]");
    t = t.permute({1, 2, 0}).contiguous();
    ImageF out(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), static_cast<int>(t.size(2)));
    std::memcpy(out.data().data(), t.data_ptr<float>(), out.size() * sizeof(float));
    return out;
}

LabelMap to_label_map(const torch::Tensor& labels) {
    auto t = labels.detach().to(torch::kCPU).squeeze();
    require(t.dim() == 2, ErrorKind::Dimension, "to_label_map expects [H,W]");
    t = t.to(torch::kUInt8).contiguous();
    LabelMap out(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), 1);
    std::memcpy(out.data().data(), t.data_ptr<std::uint8_t>(), out.size());
    return out;
}

void require_shape(const torch::Tensor& t, c10::IntArrayRef expected, const char* what) {
    if (t.sizes() != expected) {
        std::ostringstream msg;
        msg << what << ": expected shape " << expected << ", got " << t.sizes();
        fail(ErrorKind::Dimension, msg.str());
    }
}

}  // namespace s3m
