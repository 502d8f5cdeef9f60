// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "prolora/dtype.hpp"
#include "prolora/linalg.hpp"

namespace prolora {

// Tensor container in the safetensors layout: 8-byte little-endian header
// length, JSON header mapping names to dtype/shape/data_offsets, raw bytes.

struct TensorInfo {
  Dtype dtype = Dtype::kF32;
  std::vector<std::int64_t> shape;
  std::uint64_t begin = 0;  // offsets into the data section
  std::uint64_t end = 0;
  std::int64_t element_count() const;
};

struct TensorData {
  std::vector<std::int64_t> shape;
  std::vector<double> values;  // row-major
};

class TensorArchive {
 public:
  static TensorArchive load(const std::filesystem::path& path);

  const std::vector<std::string>& names() const { return names_; }
  bool contains(const std::string& name) const { return entries_.count(name) > 0; }
  const TensorInfo& info(const std::string& name) const;
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  // Reads convert to f64 on the fly; raw bytes stay as stored.
  std::vector<double> values(const std::string& name) const;
  TensorData tensor(const std::string& name) const;
  Matrix matrix(const std::string& name) const;  // 2D tensors only

 private:
  std::map<std::string, TensorInfo> entries_;
  std::vector<std::string> names_;
  std::map<std::string, std::string> metadata_;
  std::vector<std::byte> data_;
};

// Deterministic writer: names sorted lexicographically, fixed header field
// order, header padded to an 8-byte boundary. Identical logical content
// yields identical bytes.
class ArchiveWriter {
 public:
  void set_metadata(const std::string& key, const std::string& value);
  void add(const std::string& name, Dtype dtype, std::vector<std::int64_t> shape,
           const double* values, std::size_t count);
  void add_matrix(const std::string& name, Dtype dtype, const Matrix& m);
  void add_tensor(const std::string& name, Dtype dtype, const TensorData& t);

  // Writes to a temporary file and renames into place.
  void write(const std::filesystem::path& path) const;
  std::vector<std::byte> serialize() const;

 private:
  struct Pending {
    Dtype dtype;
    std::vector<std::int64_t> shape;
    std::vector<std::byte> bytes;
  };
  std::map<std::string, Pending> tensors_;
  std::map<std::string, std::string> metadata_;
};

// Hex SHA-256 of a file's bytes; identifies checkpoint content for the
// spectral cache and adapter provenance metadata.
std::string file_sha256(const std::filesystem::path& path);

}  // namespace prolora
