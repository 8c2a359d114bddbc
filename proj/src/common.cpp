// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionbits/common.hpp"

#include <cstdio>
#include <fstream>

namespace mb {

void write_file_atomic(const std::filesystem::path& path,
                       const void* data, size_t size) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot open for writing: " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) fail(ErrorCode::io_error, "short write: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    fail(ErrorCode::io_error, "rename failed: " + path.string() + ": " + ec.message());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

}  // namespace mb
