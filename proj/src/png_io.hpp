// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0
//
// Thin libpng wrappers shared by the label-map and render writers.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mb::pngio {

// 16-bit grayscale. Values are native-endian in memory.
std::vector<uint16_t> read_gray16(const std::filesystem::path& path, int& width, int& height);
void write_gray16(const std::filesystem::path& path, const uint16_t* data, int width, int height);

// 8-bit RGB, 3 bytes per pixel.
void write_rgb8(const std::filesystem::path& path, const uint8_t* data, int width, int height);

}  // namespace mb::pngio
