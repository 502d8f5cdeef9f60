// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace prolora {

enum class Dtype { kF16, kBF16, kF32, kF64 };

std::size_t dtype_size(Dtype dtype);
std::string to_string(Dtype dtype);
Dtype parse_dtype(const std::string& name);  // safetensors names: F16, BF16, F32, F64

// Half <-> float conversions, round-to-nearest-even on the way down.
std::uint16_t float_to_f16(float value);
float f16_to_float(std::uint16_t bits);
std::uint16_t float_to_bf16(float value);
float bf16_to_float(std::uint16_t bits);

// Little-endian packing of f64 values into the given storage dtype.
void encode_values(Dtype dtype, const double* values, std::size_t count,
                   std::vector<std::byte>& out);
std::vector<double> decode_values(Dtype dtype, const std::byte* data, std::size_t count);

}  // namespace prolora
