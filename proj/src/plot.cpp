// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/plot.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace s3m::plot {
namespace {

// 17 evenly spaced samples of each colormap.
constexpr std::array<Rgb, 17> kViridis{{{68, 1, 84},    {72, 24, 106},  {71, 45, 123},  {66, 64, 134},
                                        {59, 82, 139},  {51, 99, 141},  {44, 114, 142}, {38, 130, 142},
                                        {33, 145, 140}, {31, 160, 136}, {40, 174, 128}, {63, 188, 115},
                                        {94, 201, 98},  {132, 212, 75}, {173, 220, 48}, {216, 226, 25},
                                        {253, 231, 37}}};
constexpr std::array<Rgb, 17> kInferno{{{0, 0, 4},      {11, 7, 36},    {33, 12, 74},   {61, 9, 101},
                                        {87, 16, 110},  {113, 25, 110}, {138, 34, 106}, {163, 44, 97},
                                        {188, 55, 84},  {210, 70, 68},  {228, 90, 49},  {241, 115, 29},
                                        {249, 142, 9},  {252, 172, 17}, {249, 203, 53}, {242, 234, 105},
                                        {252, 255, 164}}};

Rgb lookup(std::span<const Rgb> table, double t) {
    if (!std::isfinite(t)) t = 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * static_cast<double>(table.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, table.size() - 1);
    const double f = pos - static_cast<double>(lo);
    Rgb out{};
    for (int c = 0; c < 3; ++c)
        out[c] = static_cast<std::uint8_t>(std::lround((1.0 - f) * table[lo][c] + f * table[hi][c]));
    return out;
}

void put(Image<std::uint8_t>& img, int r, int c, const Rgb& rgb) {
    for (int ch = 0; ch < 3; ++ch) img(r, c, ch) = rgb[ch];
}

}  // namespace

Rgb viridis(double t) { return lookup(kViridis, t); }
Rgb inferno(double t) { return lookup(kInferno, t); }

Image<std::uint8_t> render_disparity(const ImageF& disparity, double max_disparity, const Mask* valid) {
    require(max_disparity > 0.0, ErrorKind::Configuration, "max_disparity must be positive");
    if (valid) require_same_extent(disparity, *valid, "render_disparity");
    Image<std::uint8_t> out(disparity.height(), disparity.width(), 3);
    for (int r = 0; r < disparity.height(); ++r)
        for (int c = 0; c < disparity.width(); ++c)
            put(out, r, c, (valid && !(*valid)(r, c)) ? Rgb{0, 0, 0} : viridis(disparity(r, c) / max_disparity));
    return out;
}

Image<std::uint8_t> render_labels(const LabelMap& labels, const std::vector<Rgb>& palette) {
    Image<std::uint8_t> out(labels.height(), labels.width(), 3);
    for (int r = 0; r < labels.height(); ++r) {
        for (int c = 0; c < labels.width(); ++c) {
            const auto l = labels(r, c);
            put(out, r, c, l < palette.size() ? palette[l] : Rgb{0, 0, 0});
        }
    }
    return out;
}

Image<std::uint8_t> render_weights(const ImageF& weights) {
    const double lo = std::exp(-1.0);
    Image<std::uint8_t> out(weights.height(), weights.width(), 3);
    for (int r = 0; r < weights.height(); ++r)
        for (int c = 0; c < weights.width(); ++c) put(out, r, c, inferno((weights(r, c) - lo) / (1.0 - lo)));
    return out;
}

}  // namespace s3m::plot
