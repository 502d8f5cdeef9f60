// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#include "prolora/tensor_archive.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "prolora/errors.hpp"

namespace prolora {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
    throw IoError("failed to read " + path.string());
  }
  return bytes;
}

}  // namespace

std::int64_t TensorInfo::element_count() const {
  std::int64_t count = 1;
  for (std::int64_t dim : shape) {
    count *= dim;
  }
  return count;
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
  const std::vector<std::byte> bytes = read_file(path);
  if (bytes.size() < 8) {
    throw IoError("truncated archive (missing header length): " + path.string());
  }
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data(), 8);
  if (8 + header_len > bytes.size()) {
    throw IoError("truncated archive (header extends past end of file): " + path.string());
  }

  ordered_json header;
  try {
    header = ordered_json::parse(bytes.begin() + 8, bytes.begin() + 8 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed archive header: ") + e.what());
  }
  if (!header.is_object()) {
    throw FormatError("archive header is not a JSON object");
  }

  TensorArchive archive;
  const std::size_t data_size = bytes.size() - 8 - header_len;
  for (const auto& [name, value] : header.items()) {
    if (name == "__metadata__") {
      if (!value.is_object()) {
        throw FormatError("__metadata__ must be an object");
      }
      for (const auto& [k, v] : value.items()) {
        if (!v.is_string()) {
          throw FormatError("metadata value for '" + k + "' is not a string");
        }
        archive.metadata_[k] = v.get<std::string>();
      }
      continue;
    }
    if (!value.is_object() || !value.contains("dtype") || !value.contains("shape") ||
        !value.contains("data_offsets")) {
      throw FormatError("tensor entry '" + name + "' is missing dtype/shape/data_offsets");
    }
    TensorInfo info;
    info.dtype = parse_dtype(value["dtype"].get<std::string>());
    if (!value["shape"].is_array()) {
      throw FormatError("tensor entry '" + name + "' has a non-array shape");
    }
    for (const auto& dim : value["shape"]) {
      if (!dim.is_number_integer() || dim.get<std::int64_t>() < 0) {
        throw FormatError("tensor entry '" + name + "' has an invalid dimension");
      }
      info.shape.push_back(dim.get<std::int64_t>());
    }
    const auto& offsets = value["data_offsets"];
    if (!offsets.is_array() || offsets.size() != 2 || !offsets[0].is_number_unsigned() ||
        !offsets[1].is_number_unsigned()) {
      throw FormatError("tensor entry '" + name + "' has invalid data_offsets");
    }
    info.begin = offsets[0].get<std::uint64_t>();
    info.end = offsets[1].get<std::uint64_t>();
    if (info.begin > info.end || info.end > data_size) {
      throw FormatError("tensor entry '" + name + "' declares bytes outside the file");
    }
    const std::uint64_t expect =
        static_cast<std::uint64_t>(info.element_count()) * dtype_size(info.dtype);
    if (info.end - info.begin != expect) {
      throw FormatError("tensor entry '" + name + "' byte length does not match its shape");
    }
    if (!archive.entries_.emplace(name, std::move(info)).second) {
      throw FormatError("duplicate tensor name '" + name + "'");
    }
  }

  // Byte ranges must tile the data section: sorted by begin, no gaps, no overlap.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
  ranges.reserve(archive.entries_.size());
  for (const auto& [name, info] : archive.entries_) {
    ranges.emplace_back(info.begin, info.end);
  }
  std::sort(ranges.begin(), ranges.end());
  std::uint64_t cursor = 0;
  for (const auto& [begin, end] : ranges) {
    if (begin != cursor) {
      throw FormatError(begin < cursor ? "overlapping tensor byte ranges"
                                       : "gap between tensor byte ranges");
    }
    cursor = end;
  }
  if (cursor != data_size) {
    throw FormatError("tensor byte ranges do not cover the data section");
  }

  archive.data_.assign(bytes.begin() + 8 + header_len, bytes.end());
  archive.names_.reserve(archive.entries_.size());
  for (const auto& [name, info] : archive.entries_) {
    archive.names_.push_back(name);
  }
  return archive;
}

const TensorInfo& TensorArchive::info(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw KeyError("no tensor named '" + name + "'");
  }
  return it->second;
}

std::vector<double> TensorArchive::values(const std::string& name) const {
  const TensorInfo& t = info(name);
  return decode_values(t.dtype, data_.data() + t.begin,
                       static_cast<std::size_t>(t.element_count()));
}

TensorData TensorArchive::tensor(const std::string& name) const {
  return TensorData{info(name).shape, values(name)};
}

Matrix TensorArchive::matrix(const std::string& name) const {
  const TensorInfo& t = info(name);
  if (t.shape.size() != 2) {
    throw ShapeError("tensor '" + name + "' is not 2D");
  }
  const std::vector<double> vals = values(name);
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(vals.data(), t.shape[0],
                                                          t.shape[1]);
}

void ArchiveWriter::set_metadata(const std::string& key, const std::string& value) {
  metadata_[key] = value;
}

void ArchiveWriter::add(const std::string& name, Dtype dtype,
                        std::vector<std::int64_t> shape, const double* values,
                        std::size_t count) {
  std::int64_t expect = 1;
  for (std::int64_t dim : shape) {
    if (dim < 0) {
      throw FormatError("negative dimension for tensor '" + name + "'");
    }
    expect *= dim;
  }
  if (static_cast<std::size_t>(expect) != count) {
    throw FormatError("value count does not match shape for tensor '" + name + "'");
  }
  Pending pending;
  pending.dtype = dtype;
  pending.shape = std::move(shape);
  encode_values(dtype, values, count, pending.bytes);
  if (!tensors_.emplace(name, std::move(pending)).second) {
    throw FormatError("duplicate tensor name '" + name + "'");
  }
}

void ArchiveWriter::add_matrix(const std::string& name, Dtype dtype, const Matrix& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = m;
  add(name, dtype, {m.rows(), m.cols()}, row_major.data(),
      static_cast<std::size_t>(m.size()));
}

void ArchiveWriter::add_tensor(const std::string& name, Dtype dtype, const TensorData& t) {
  add(name, dtype, t.shape, t.values.data(), t.values.size());
}

std::vector<std::byte> ArchiveWriter::serialize() const {
  ordered_json header = ordered_json::object();
  if (!metadata_.empty()) {
    ordered_json meta = ordered_json::object();
    for (const auto& [k, v] : metadata_) {
      meta[k] = v;
    }
    header["__metadata__"] = std::move(meta);
  }
  std::uint64_t offset = 0;
  for (const auto& [name, pending] : tensors_) {  // std::map iterates sorted
    ordered_json entry = ordered_json::object();
    entry["dtype"] = to_string(pending.dtype);
    entry["shape"] = pending.shape;
    entry["data_offsets"] = {offset, offset + pending.bytes.size()};
    header[name] = std::move(entry);
    offset += pending.bytes.size();
  }
  std::string header_str = header.dump();
  while (header_str.size() % 8 != 0) {
    header_str.push_back(' ');
  }

  std::vector<std::byte> out;
  out.resize(8 + header_str.size() + offset);
  const std::uint64_t header_len = header_str.size();
  std::memcpy(out.data(), &header_len, 8);
  std::memcpy(out.data() + 8, header_str.data(), header_str.size());
  std::size_t cursor = 8 + header_str.size();
  for (const auto& [name, pending] : tensors_) {
    std::memcpy(out.data() + cursor, pending.bytes.data(), pending.bytes.size());
    cursor += pending.bytes.size();
  }
  return out;
}

void ArchiveWriter::write(const std::filesystem::path& path) const {
  const std::vector<std::byte> bytes = serialize();
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + tmp.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " +
                  ec.message());
  }
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof(buffer));
    EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  EVP_DigestFinal_ex(ctx, digest, &digest_len);
  EVP_MD_CTX_free(ctx);

  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * digest_len);
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace prolora
