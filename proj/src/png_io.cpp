// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

namespace s3m::png {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr file(std::fopen(path.c_str(), mode));
    if (!file) {
        if (mode[0] == 'r') fail(ErrorKind::NotFound, "cannot open " + path.string());
        fail(ErrorKind::Io, "cannot write " + path.string());
    }
    return file;
}

struct Decoded {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<png_byte> bytes;
};

Decoded decode(const std::filesystem::path& path) {
    auto file = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorKind::Io, "libpng init failed");
    }
    Decoded out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorKind::Io, "corrupt PNG " + path.string());
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) png_set_swap(png);  // host little-endian rows
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    const auto row_bytes = png_get_rowbytes(png, info);
    out.bytes.resize(row_bytes * out.height);
    std::vector<png_bytep> rows(out.height);
    for (int r = 0; r < out.height; ++r) rows[r] = out.bytes.data() + r * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void encode(const std::filesystem::path& path, int width, int height, int channels, int bit_depth,
            const png_byte* data) {
    auto file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorKind::Io, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorKind::Io, "failed writing " + path.string());
    }
    png_init_io(png, file.get());
    const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_RGBA;
    png_set_IHDR(png, info, width, height, bit_depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);
    const std::size_t row_bytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
    for (int r = 0; r < height; ++r) png_write_row(png, const_cast<png_bytep>(data + r * row_bytes));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

Image<std::uint8_t> read_u8(const std::filesystem::path& path, int expected_channels) {
    auto dec = decode(path);
    require(dec.bit_depth == 8, ErrorKind::Consistency, path.string() + ": expected 8-bit PNG");
    // Drop alpha / replicate gray as needed.
    Image<std::uint8_t> img(dec.height, dec.width, expected_channels);
    for (int r = 0; r < dec.height; ++r) {
        for (int c = 0; c < dec.width; ++c) {
            const png_byte* px = dec.bytes.data() + (static_cast<std::size_t>(r) * dec.width + c) * dec.channels;
            for (int ch = 0; ch < expected_channels; ++ch) {
                const int src = dec.channels >= 3 ? std::min(ch, 2) : 0;
                img(r, c, ch) = px[expected_channels == 1 && dec.channels >= 3 ? 0 : src];
            }
        }
    }
    return img;
}

Image<std::uint16_t> read_u16(const std::filesystem::path& path) {
    auto dec = decode(path);
    require(dec.bit_depth == 16 && dec.channels == 1, ErrorKind::Consistency,
            path.string() + ": expected 16-bit single-channel PNG");
    Image<std::uint16_t> img(dec.height, dec.width, 1);
    std::memcpy(img.data().data(), dec.bytes.data(), img.size() * sizeof(std::uint16_t));
    return img;
}

void write_u8(const std::filesystem::path& path, const Image<std::uint8_t>& image) {
    require(image.channels() == 1 || image.channels() == 3 || image.channels() == 4, ErrorKind::Dimension,
            "PNG writer supports 1, 3 or 4 channels");
    encode(path, image.width(), image.height(), image.channels(), 8, image.data().data());
}

void write_u16(const std::filesystem::path& path, const Image<std::uint16_t>& image) {
    require(image.channels() == 1, ErrorKind::Dimension, "16-bit PNG writer supports one channel");
    encode(path, image.width(), image.height(), 1, 16, reinterpret_cast<const png_byte*>(image.data().data()));
}

}  // namespace s3m::png
