// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#include "prolora/dtype.hpp"

#include <cmath>
#include <cstring>

#include "prolora/errors.hpp"

namespace prolora {

std::size_t dtype_size(Dtype dtype) {
  switch (dtype) {
    case Dtype::kF16:
    case Dtype::kBF16: return 2;
    case Dtype::kF32: return 4;
    case Dtype::kF64: return 8;
  }
  return 0;
}

std::string to_string(Dtype dtype) {
  switch (dtype) {
    case Dtype::kF16: return "F16";
    case Dtype::kBF16: return "BF16";
    case Dtype::kF32: return "F32";
    case Dtype::kF64: return "F64";
  }
  return "F64";
}

Dtype parse_dtype(const std::string& name) {
  if (name == "F16") return Dtype::kF16;
  if (name == "BF16") return Dtype::kBF16;
  if (name == "F32") return Dtype::kF32;
  if (name == "F64") return Dtype::kF64;
  throw FormatError("unsupported tensor dtype: " + name);
}

std::uint16_t float_to_f16(float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  const std::uint32_t sign = (bits >> 16) & 0x8000u;
  const std::uint32_t abs = bits & 0x7fffffffu;

  if (abs >= 0x7f800000u) {  // inf / nan
    const std::uint32_t mantissa = abs > 0x7f800000u ? 0x0200u : 0u;
    return static_cast<std::uint16_t>(sign | 0x7c00u | mantissa);
  }
  if (abs >= 0x477ff000u) {  // overflows to inf after rounding
    return static_cast<std::uint16_t>(sign | 0x7c00u);
  }
  if (abs < 0x38800000u) {  // subnormal or zero
    const float scaled = std::fabs(value) * 0x1p24f;        // shift into integer range
    std::uint32_t mant = static_cast<std::uint32_t>(scaled);  // truncate
    const float rem = scaled - static_cast<float>(mant);
    if (rem > 0.5f || (rem == 0.5f && (mant & 1u))) {
      ++mant;
    }
    return static_cast<std::uint16_t>(sign | mant);
  }
  // Normal range: re-bias exponent, round mantissa to nearest even.
  std::uint32_t half = ((abs >> 13) & 0x3ffu) | ((((abs >> 23) - 112u) & 0x1fu) << 10);
  const std::uint32_t round_bits = abs & 0x1fffu;
  if (round_bits > 0x1000u || (round_bits == 0x1000u && (half & 1u))) {
    ++half;
  }
  return static_cast<std::uint16_t>(sign | half);
}

float f16_to_float(std::uint16_t bits) {
  const std::uint32_t sign = static_cast<std::uint32_t>(bits & 0x8000u) << 16;
  const std::uint32_t exp = (bits >> 10) & 0x1fu;
  const std::uint32_t mant = bits & 0x3ffu;
  std::uint32_t out;
  if (exp == 0x1fu) {
    out = sign | 0x7f800000u | (mant << 13);
  } else if (exp == 0) {
    if (mant == 0) {
      out = sign;
    } else {
      float f = static_cast<float>(mant) * 0x1p-24f;
      std::memcpy(&out, &f, 4);
      out |= sign;
    }
  } else {
    out = sign | ((exp + 112u) << 23) | (mant << 13);
  }
  float value;
  std::memcpy(&value, &out, 4);
  return value;
}

std::uint16_t float_to_bf16(float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  if ((bits & 0x7fffffffu) > 0x7f800000u) {  // nan: keep it a nan after truncation
    return static_cast<std::uint16_t>((bits >> 16) | 0x0040u);
  }
  const std::uint32_t lower = bits & 0xffffu;
  std::uint32_t upper = bits >> 16;
  if (lower > 0x8000u || (lower == 0x8000u && (upper & 1u))) {
    ++upper;
  }
  return static_cast<std::uint16_t>(upper);
}

float bf16_to_float(std::uint16_t bits) {
  const std::uint32_t out = static_cast<std::uint32_t>(bits) << 16;
  float value;
  std::memcpy(&value, &out, 4);
  return value;
}

void encode_values(Dtype dtype, const double* values, std::size_t count,
                   std::vector<std::byte>& out) {
  out.resize(count * dtype_size(dtype));
  switch (dtype) {
    case Dtype::kF64:
      std::memcpy(out.data(), values, count * 8);
      break;
    case Dtype::kF32: {
      float* dst = reinterpret_cast<float*>(out.data());
      for (std::size_t i = 0; i < count; ++i) {
        dst[i] = static_cast<float>(values[i]);
      }
      break;
    }
    case Dtype::kF16: {
      std::uint16_t* dst = reinterpret_cast<std::uint16_t*>(out.data());
      for (std::size_t i = 0; i < count; ++i) {
        dst[i] = float_to_f16(static_cast<float>(values[i]));
      }
      break;
    }
    case Dtype::kBF16: {
      std::uint16_t* dst = reinterpret_cast<std::uint16_t*>(out.data());
      for (std::size_t i = 0; i < count; ++i) {
        dst[i] = float_to_bf16(static_cast<float>(values[i]));
      }
      break;
    }
  }
}

std::vector<double> decode_values(Dtype dtype, const std::byte* data, std::size_t count) {
  std::vector<double> out(count);
  switch (dtype) {
    case Dtype::kF64:
      std::memcpy(out.data(), data, count * 8);
      break;
    case Dtype::kF32: {
      const float* src = reinterpret_cast<const float*>(data);
      for (std::size_t i = 0; i < count; ++i) {
        out[i] = static_cast<double>(src[i]);
      }
      break;
    }
    case Dtype::kF16: {
      const std::uint16_t* src = reinterpret_cast<const std::uint16_t*>(data);
      for (std::size_t i = 0; i < count; ++i) {
        out[i] = static_cast<double>(f16_to_float(src[i]));
      }
      break;
    }
    case Dtype::kBF16: {
      const std::uint16_t* src = reinterpret_cast<const std::uint16_t*>(data);
      for (std::size_t i = 0; i < count; ++i) {
        out[i] = static_cast<double>(bf16_to_float(src[i]));
      }
      break;
    }
  }
  return out;
}

}  // namespace prolora
