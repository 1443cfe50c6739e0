// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "s3m/image.hpp"

namespace s3m::png {

// Thin libpng wrappers. Writers never embed timestamps, so identical rasters
// produce identical files.

Image<std::uint8_t> read_u8(const std::filesystem::path& path, int expected_channels);
Image<std::uint16_t> read_u16(const std::filesystem::path& path);

void write_u8(const std::filesystem::path& path, const Image<std::uint8_t>& image);
void write_u16(const std::filesystem::path& path, const Image<std::uint16_t>& image);

}  // namespace s3m::png
