// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#include "prolora/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "prolora/errors.hpp"
#include "prolora/transfer.hpp"

namespace prolora {

namespace {

bool strip_suffix(const std::string& name, const std::string& suffix, std::string& stem) {
  if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(),
                                                   suffix.size(), suffix) != 0) {
    return false;
  }
  stem = name.substr(0, name.size() - suffix.size());
  return true;
}

// Factors stored as conv kernels collapse to matrices over the trailing axes.
Matrix as_factor_matrix(const TensorArchive& archive, const std::string& name) {
  const TensorInfo& info = archive.info(name);
  if (info.shape.size() == 2) {
    return archive.matrix(name);
  }
  if (info.shape.size() == 4) {
    const TensorData t = archive.tensor(name);
    return flatten_conv(t.values, {t.shape[0], t.shape[1], t.shape[2], t.shape[3]});
  }
  throw FormatError("adapter factor '" + name + "' is neither 2D nor a 4D conv kernel");
}

}  // namespace

const AdapterEntry* AdapterSet::find(const std::string& module_path) const {
  for (const AdapterEntry& entry : entries) {
    if (entry.module_path == module_path) {
      return &entry;
    }
  }
  return nullptr;
}

AdapterSet adapter_from_archive(const TensorArchive& archive) {
  struct Parts {
    std::optional<std::string> down_name;
    std::optional<std::string> up_name;
    std::optional<double> alpha;
  };
  std::map<std::string, Parts> per_module;
  AdapterSet set;
  set.metadata = archive.metadata();

  for (const std::string& name : archive.names()) {
    std::string stem;
    if (strip_suffix(name, ".lora_down.weight", stem) ||
        strip_suffix(name, ".lora_A.weight", stem)) {
      per_module[stem].down_name = name;
    } else if (strip_suffix(name, ".lora_up.weight", stem) ||
               strip_suffix(name, ".lora_B.weight", stem)) {
      per_module[stem].up_name = name;
    } else if (strip_suffix(name, ".alpha", stem)) {
      const std::vector<double> v = archive.values(name);
      if (v.size() != 1) {
        throw FormatError("alpha tensor '" + name + "' is not a scalar");
      }
      per_module[stem].alpha = v[0];
    } else {
      set.extras[name] = archive.tensor(name);
    }
  }

  for (const auto& [module_path, parts] : per_module) {
    if (!parts.down_name || !parts.up_name) {
      if (parts.down_name || parts.up_name) {
        throw FormatError("module '" + module_path +
                          "' has only one of its lora_down/lora_up factors");
      }
      continue;  // a bare alpha with no factors: ignore
    }
    AdapterEntry entry;
    entry.module_path = module_path;
    entry.down = as_factor_matrix(archive, *parts.down_name);
    entry.up = as_factor_matrix(archive, *parts.up_name);
    if (entry.up.cols() != entry.down.rows()) {
      std::ostringstream msg;
      msg << "module '" << module_path << "': up is " << entry.up.rows() << "x"
          << entry.up.cols() << " but down is " << entry.down.rows() << "x"
          << entry.down.cols();
      throw FormatError(msg.str());
    }
    if (parts.alpha) {
      const double rank = static_cast<double>(entry.rank());
      entry.scale = rank > 0 ? *parts.alpha / rank : 1.0;
    }
    if (!std::isfinite(entry.scale) || entry.scale <= 0.0) {
      throw FormatError("module '" + module_path + "' has a non-positive scale");
    }
    set.entries.push_back(std::move(entry));
  }
  std::sort(set.entries.begin(), set.entries.end(),
            [](const AdapterEntry& a, const AdapterEntry& b) {
              return a.module_path < b.module_path;
            });
  return set;
}

AdapterSet load_adapter(const std::filesystem::path& path) {
  return adapter_from_archive(TensorArchive::load(path));
}

void save_adapter(const AdapterSet& set, const std::filesystem::path& path, Dtype dtype) {
  std::optional<Index> rank;
  for (const AdapterEntry& entry : set.entries) {
    if (entry.up.cols() != entry.down.rows()) {
      throw FormatError("module '" + entry.module_path + "' has inconsistent factor ranks");
    }
    if (!std::isfinite(entry.scale) || entry.scale <= 0.0) {
      throw FormatError("module '" + entry.module_path + "' has a non-positive scale");
    }
    if (rank && *rank != entry.rank()) {
      throw FormatError("adapter entries do not share a single rank");
    }
    rank = entry.rank();
  }

  ArchiveWriter writer;
  for (const auto& [key, value] : set.metadata) {
    writer.set_metadata(key, value);
  }
  if (set.metadata.find("format_version") == set.metadata.end()) {
    writer.set_metadata("format_version", "1");
  }
  for (const AdapterEntry& entry : set.entries) {
    writer.add_matrix(entry.module_path + ".lora_down.weight", dtype, entry.down);
    writer.add_matrix(entry.module_path + ".lora_up.weight", dtype, entry.up);
    if (entry.scale != 1.0) {
      const double alpha = entry.scale * static_cast<double>(entry.rank());
      writer.add(entry.module_path + ".alpha", dtype, {}, &alpha, 1);
    }
  }
  for (const auto& [name, tensor] : set.extras) {
    writer.add_tensor(name, dtype, tensor);
  }
  writer.write(path);
}

}  // namespace prolora
