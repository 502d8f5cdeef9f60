// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "prolora/linalg.hpp"
#include "prolora/tensor_archive.hpp"

namespace prolora {

// One factored low-rank update: delta = scale * up * down.
struct AdapterEntry {
  std::string module_path;
  Matrix down;  // r x n
  Matrix up;    // m x r
  double scale = 1.0;

  Index rank() const { return up.cols(); }
  Matrix dense_delta() const { return scale * up * down; }
};

struct AdapterSet {
  std::vector<AdapterEntry> entries;  // sorted by module_path
  // Tensors carried through untouched (e.g. DoRA magnitude vectors).
  std::map<std::string, TensorData> extras;
  std::map<std::string, std::string> metadata;

  const AdapterEntry* find(const std::string& module_path) const;
};

// Reads `<module>.lora_down.weight` / `<module>.lora_up.weight` pairs, with
// the `lora_A` / `lora_B` naming accepted as input aliases. `<module>.alpha`
// scalars become scale = alpha / rank. 4D conv factors are flattened to 2D.
AdapterSet load_adapter(const std::filesystem::path& path);
AdapterSet adapter_from_archive(const TensorArchive& archive);

// Deterministic save under the lora_down/lora_up convention. All entries
// must share one rank; an `.alpha` tensor is written only when scale != 1.
void save_adapter(const AdapterSet& set, const std::filesystem::path& path,
                  Dtype dtype = Dtype::kF32);

}  // namespace prolora
