// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#include "png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "motionbits/common.hpp"

namespace mb::pngio {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

std::vector<uint16_t> read_gray16(const std::filesystem::path& path, int& width, int& height) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(ErrorCode::io_error, "cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorCode::io_error, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorCode::io_error, "png_create_info_struct failed");
  }
  std::vector<uint16_t> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::format_error, "not a valid PNG file: " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::format_error, "label map must be grayscale PNG: " + path.string());
  }
  if (depth < 16) {
    png_set_expand_gray_1_2_4_to_8(png);
    // widen 8-bit inputs so callers always see 16-bit samples
  }
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  png_read_update_info(png, info);
  depth = png_get_bit_depth(png, info);

  pixels.assign(static_cast<size_t>(width) * height, 0);
  if (depth == 16) {
    png_set_swap(png);  // PNG stores big-endian samples
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) {
      rows[y] = reinterpret_cast<png_bytep>(pixels.data() + static_cast<size_t>(y) * width);
    }
    png_read_image(png, rows.data());
  } else {
    std::vector<uint8_t> row8(static_cast<size_t>(width));
    for (int y = 0; y < height; ++y) {
      png_read_row(png, row8.data(), nullptr);
      for (int x = 0; x < width; ++x) pixels[static_cast<size_t>(y) * width + x] = row8[x];
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

void write_gray16(const std::filesystem::path& path, const uint16_t* data, int width, int height) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) fail(ErrorCode::io_error, "cannot open for writing: " + tmp.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(ErrorCode::io_error, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
      png_destroy_write_struct(&png, nullptr);
      fail(ErrorCode::io_error, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      fail(ErrorCode::io_error, "png write failed: " + tmp.string());
    }
    png_init_io(png, fp.get());
    png_set_compression_level(png, 6);  // pinned for byte-stable output
    png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_set_swap(png);
    for (int y = 0; y < height; ++y) {
      png_write_row(png, reinterpret_cast<png_const_bytep>(data + static_cast<size_t>(y) * width));
    }
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::io_error, "rename failed: " + path.string());
}

void write_rgb8(const std::filesystem::path& path, const uint8_t* data, int width, int height) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) fail(ErrorCode::io_error, "cannot open for writing: " + tmp.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(ErrorCode::io_error, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
      png_destroy_write_struct(&png, nullptr);
      fail(ErrorCode::io_error, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      fail(ErrorCode::io_error, "png write failed: " + tmp.string());
    }
    png_init_io(png, fp.get());
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
      png_write_row(png, data + static_cast<size_t>(y) * width * 3);
    }
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::io_error, "rename failed: " + path.string());
}

}  // namespace mb::pngio
