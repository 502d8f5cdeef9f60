// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "prolora/linalg.hpp"
#include "prolora/tensor_archive.hpp"

namespace prolora {

// Persisted SVD bases of one model's weight matrices. The one-time full-SVD
// cost is paid on first use and amortized across transfers; entries are keyed
// by (content hash, module path, rank tolerance) so a stale cache can never
// be served for edited weights.
class SpectralCache {
 public:
  SpectralCache(std::string model_hash, double rel_tol);
  SpectralCache(SpectralCache&& other) noexcept;
  SpectralCache& operator=(SpectralCache&& other) noexcept;

  // Loads the sidecar archive for `model_path` when its recorded hash and
  // tolerance match; otherwise starts empty.
  static SpectralCache open(const std::filesystem::path& model_path, double rel_tol);

  const std::string& model_hash() const { return model_hash_; }
  double rel_tol() const { return rel_tol_; }
  std::size_t size() const;

  std::shared_ptr<const SpectralBases> find(const std::string& module_path) const;
  std::shared_ptr<const SpectralBases> get_or_compute(
      const std::string& module_path, const std::function<Matrix()>& load_weight);
  void put(const std::string& module_path, SpectralBases bases);

  // Persists all entries as an f64 archive beside the checkpoint, written to
  // a temporary file and renamed into place. No-op when nothing changed.
  void save(const std::filesystem::path& model_path) const;

  static std::filesystem::path sidecar_path(const std::filesystem::path& model_path,
                                            double rel_tol);

 private:
  std::string model_hash_;
  double rel_tol_ = kDefaultRankTol;
  mutable std::mutex mutex_;
  mutable bool dirty_ = false;
  std::map<std::string, std::shared_ptr<const SpectralBases>> entries_;
};

// Modules of a checkpoint usable for transfer: 2D weights plus 4D conv
// kernels flattened over their trailing axes. Ids drop a ".weight" suffix.
struct ModuleWeight {
  std::string id;
  Matrix weight;
  std::vector<std::int64_t> original_shape;
};

std::vector<ModuleWeight> load_modules(const TensorArchive& archive);

// Weight matrix of one module; KeyError when absent from the model.
Matrix module_weight(const TensorArchive& archive, const std::string& module_path);

// Cache-backed basis lookup for one module of a loaded model.
std::shared_ptr<const SpectralBases> spectral_cache_get_or_compute(
    SpectralCache& cache, const TensorArchive& model, const std::string& module_path);

}  // namespace prolora
