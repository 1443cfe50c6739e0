// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Single-file checkpoint container:
//
//   "S3MCKPT1" | u32 version | u64 step | u64 len, config text
//   u64 entry count | entries
//   entry: u64 len, key | u8 dtype | u8 ndim | i64 dims[ndim] | raw bytes
//
// Keys are "model/<parameter path>", "buffer/<buffer path>" and
// "optim/<parameter path>/{exp_avg,exp_avg_sq,step}". Little-endian.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <torch/torch.h>

namespace s3m::checkpoint {

inline constexpr std::uint32_t kFormatVersion = 1;

struct Checkpoint {
    std::uint32_t version = kFormatVersion;
    std::uint64_t step = 0;
    std::string config_text;
    std::map<std::string, torch::Tensor> tensors;
};

/// Snapshot of parameters, buffers and (when given) AdamW moments.
Checkpoint capture(torch::nn::Module& model, const torch::optim::AdamW* optimizer, std::uint64_t step,
                   std::string config_text);

/// Copies tensors back. Missing or mis-shaped model entries → Consistency error.
/// Optimizer state is rebuilt when the optimizer is given and the archive holds it.
void restore(const Checkpoint& checkpoint, torch::nn::Module& model, torch::optim::AdamW* optimizer);

void write(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Missing file → NotFound; bad magic, version or truncation → Data error.
Checkpoint read(const std::filesystem::path& path);

}  // namespace s3m::checkpoint
