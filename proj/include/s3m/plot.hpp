// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "s3m/image.hpp"

namespace s3m::plot {

using Rgb = std::array<std::uint8_t, 3>;

/// Piecewise-linear lookup into the viridis / inferno control tables; t is clamped to [0,1].
Rgb viridis(double t);
Rgb inferno(double t);

/// Viridis over the fixed range [0, max_disparity]; invalid pixels (mask 0) render black.
Image<std::uint8_t> render_disparity(const ImageF& disparity, double max_disparity, const Mask* valid = nullptr);

/// Palette lookup; labels outside the palette (including ignore) render black.
Image<std::uint8_t> render_labels(const LabelMap& labels, const std::vector<Rgb>& palette);

/// Inferno over the fixed range [e^-1, 1].
Image<std::uint8_t> render_weights(const ImageF& weights);

}  // namespace s3m::plot
