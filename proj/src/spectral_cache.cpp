// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#include "prolora/spectral_cache.hpp"

#include <cstdio>

#include "prolora/errors.hpp"
#include "prolora/transfer.hpp"

namespace prolora {

namespace {

constexpr const char* kHashKey = "prolora.model_hash";
constexpr const char* kTolKey = "prolora.rank_tolerance";

std::string tol_string(double rel_tol) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", rel_tol);
  return buf;
}

}  // namespace

SpectralCache::SpectralCache(std::string model_hash, double rel_tol)
    : model_hash_(std::move(model_hash)), rel_tol_(rel_tol) {}

SpectralCache::SpectralCache(SpectralCache&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  model_hash_ = std::move(other.model_hash_);
  rel_tol_ = other.rel_tol_;
  dirty_ = other.dirty_;
  entries_ = std::move(other.entries_);
}

SpectralCache& SpectralCache::operator=(SpectralCache&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    model_hash_ = std::move(other.model_hash_);
    rel_tol_ = other.rel_tol_;
    dirty_ = other.dirty_;
    entries_ = std::move(other.entries_);
  }
  return *this;
}

std::filesystem::path SpectralCache::sidecar_path(const std::filesystem::path& model_path,
                                                  double rel_tol) {
  return model_path.string() + ".spectral-" + tol_string(rel_tol) + ".safetensors";
}

SpectralCache SpectralCache::open(const std::filesystem::path& model_path, double rel_tol) {
  SpectralCache cache(file_sha256(model_path), rel_tol);
  const std::filesystem::path sidecar = sidecar_path(model_path, rel_tol);
  if (!std::filesystem::exists(sidecar)) {
    return cache;
  }
  TensorArchive archive;
  try {
    archive = TensorArchive::load(sidecar);
  } catch (const Error&) {
    return cache;  // unreadable sidecar: recompute from scratch
  }
  const auto& meta = archive.metadata();
  const auto hash_it = meta.find(kHashKey);
  const auto tol_it = meta.find(kTolKey);
  if (hash_it == meta.end() || hash_it->second != cache.model_hash_ ||
      tol_it == meta.end() || tol_it->second != tol_string(rel_tol)) {
    return cache;  // stale or mismatched: keys do not match this model
  }
  for (const std::string& name : archive.names()) {
    const std::string suffix = "#sigma";
    if (name.size() <= suffix.size() ||
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
      continue;
    }
    const std::string module = name.substr(0, name.size() - suffix.size());
    SpectralBases b;
    b.u_par = archive.matrix(module + "#u_par");
    b.u_perp = archive.matrix(module + "#u_perp");
    b.v_par = archive.matrix(module + "#v_par");
    b.v_perp = archive.matrix(module + "#v_perp");
    const std::vector<double> sigma = archive.values(name);
    b.singular_values = Eigen::Map<const Vector>(sigma.data(), sigma.size());
    b.rank = b.u_par.cols();
    b.rows = b.u_par.rows();
    b.cols = b.v_par.rows();
    cache.entries_[module] = std::make_shared<const SpectralBases>(std::move(b));
  }
  return cache;
}

std::size_t SpectralCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::shared_ptr<const SpectralBases> SpectralCache::find(const std::string& module_path) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(module_path);
  return it == entries_.end() ? nullptr : it->second;
}

void SpectralCache::put(const std::string& module_path, SpectralBases bases) {
  std::lock_guard lock(mutex_);
  entries_[module_path] = std::make_shared<const SpectralBases>(std::move(bases));
  dirty_ = true;
}

std::shared_ptr<const SpectralBases> SpectralCache::get_or_compute(
    const std::string& module_path, const std::function<Matrix()>& load_weight) {
  if (auto hit = find(module_path)) {
    return hit;
  }
  auto computed = std::make_shared<const SpectralBases>(
      compute_bases(load_weight(), rel_tol_));
  std::lock_guard lock(mutex_);
  auto [it, inserted] = entries_.emplace(module_path, std::move(computed));
  if (inserted) {
    dirty_ = true;
  }
  return it->second;
}

void SpectralCache::save(const std::filesystem::path& model_path) const {
  std::lock_guard lock(mutex_);
  if (!dirty_) {
    return;
  }
  ArchiveWriter writer;
  writer.set_metadata(kHashKey, model_hash_);
  writer.set_metadata(kTolKey, tol_string(rel_tol_));
  for (const auto& [module, bases] : entries_) {
    writer.add_matrix(module + "#u_par", Dtype::kF64, bases->u_par);
    writer.add_matrix(module + "#u_perp", Dtype::kF64, bases->u_perp);
    writer.add_matrix(module + "#v_par", Dtype::kF64, bases->v_par);
    writer.add_matrix(module + "#v_perp", Dtype::kF64, bases->v_perp);
    writer.add(module + "#sigma", Dtype::kF64, {bases->singular_values.size()},
               bases->singular_values.data(),
               static_cast<std::size_t>(bases->singular_values.size()));
  }
  writer.write(sidecar_path(model_path, rel_tol_));
  dirty_ = false;
}

std::vector<ModuleWeight> load_modules(const TensorArchive& archive) {
  std::vector<ModuleWeight> modules;
  for (const std::string& name : archive.names()) {
    const TensorInfo& info = archive.info(name);
    ModuleWeight mod;
    if (info.shape.size() == 2) {
      mod.weight = archive.matrix(name);
    } else if (info.shape.size() == 4) {
      const TensorData t = archive.tensor(name);
      mod.weight = flatten_conv(t.values, {t.shape[0], t.shape[1], t.shape[2], t.shape[3]});
    } else {
      continue;
    }
    mod.original_shape = info.shape;
    mod.id = name;
    const std::string suffix = ".weight";
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      mod.id = name.substr(0, name.size() - suffix.size());
    }
    modules.push_back(std::move(mod));
  }
  return modules;  // archive names are sorted, so modules are too
}

Matrix module_weight(const TensorArchive& archive, const std::string& module_path) {
  const std::string weight_name = module_path + ".weight";
  const std::string& name = archive.contains(weight_name) ? weight_name : module_path;
  if (!archive.contains(name)) {
    throw KeyError("model has no module '" + module_path + "'");
  }
  const TensorInfo& info = archive.info(name);
  if (info.shape.size() == 4) {
    const TensorData t = archive.tensor(name);
    return flatten_conv(t.values, {t.shape[0], t.shape[1], t.shape[2], t.shape[3]});
  }
  return archive.matrix(name);
}

std::shared_ptr<const SpectralBases> spectral_cache_get_or_compute(
    SpectralCache& cache, const TensorArchive& model, const std::string& module_path) {
  return cache.get_or_compute(module_path,
                              [&] { return module_weight(model, module_path); });
}

}  // namespace prolora
