// Copyright 2026 MotionBits Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace mb {

enum class ErrorCode {
  invalid_argument,
  io_error,
  format_error,
  degenerate_fit,
  no_model,
  domain_error,
  validation
};

/// Exception carrying a machine-readable category alongside the message.
/// The C API maps these categories onto its status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

/// SplitMix64 step; used to derive independent per-node / per-trial seeds
/// from one user-facing seed so results are stable under any evaluation
/// order.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Write-temp-then-rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path,
                       const void* data, size_t size);
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& text);

}  // namespace mb
