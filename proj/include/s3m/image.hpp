// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "s3m/errors.hpp"

namespace s3m {

/// Dense row-major H×W×C raster. Channels are interleaved.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels = 1, T fill = T{})
        : height_(height), width_(width), channels_(channels),
          data_(static_cast<std::size_t>(height) * width * channels, fill) {
        require(height >= 0 && width >= 0 && channels >= 1, ErrorKind::Dimension, "negative image extent");
    }

    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int channels() const noexcept { return channels_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] T& operator()(int row, int col, int ch = 0) { return data_[index(row, col, ch)]; }
    [[nodiscard]] const T& operator()(int row, int col, int ch = 0) const { return data_[index(row, col, ch)]; }

    [[nodiscard]] std::span<T> data() noexcept { return data_; }
    [[nodiscard]] std::span<const T> data() const noexcept { return data_; }
    [[nodiscard]] std::vector<T>& storage() noexcept { return data_; }
    [[nodiscard]] const std::vector<T>& storage() const noexcept { return data_; }

    template <typename U>
    [[nodiscard]] bool same_extent(const Image<U>& other) const noexcept {
        return height_ == other.height() && width_ == other.width();
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    [[nodiscard]] std::size_t index(int row, int col, int ch) const noexcept {
        return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 1;
    std::vector<T> data_;
};

using ImageF = Image<float>;
using Mask = Image<std::uint8_t>;
using LabelMap = Image<std::uint8_t>;

template <typename T, typename U>
void require_same_extent(const Image<T>& a, const Image<U>& b, const char* what) {
    require(a.same_extent(b), ErrorKind::Dimension,
            std::string(what) + ": extent " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                " vs " + std::to_string(b.height()) + "x" + std::to_string(b.width()));
}

}  // namespace s3m
