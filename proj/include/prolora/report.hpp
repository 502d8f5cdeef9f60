// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prolora/decompose.hpp"
#include "prolora/similarity.hpp"
#include "prolora/transfer.hpp"

namespace prolora {

struct ModuleRecord {
  std::string source_module;
  std::string target_module;
  SimilarityScore similarity;
  double source_norm = 0.0;
  double source_par_norm = 0.0;
  double source_perp_norm = 0.0;
  double source_residual_norm = 0.0;
  double transferred_norm = 0.0;
  double transferred_par_norm = 0.0;
  double transferred_perp_norm = 0.0;
  double recompression_residual = 0.0;
  std::string mode;
};

struct TransferReport {
  double threshold = 0.0;
  // Wall time is kept out of the emitted files so identical jobs produce
  // identical bytes; the CLI prints it on its summary line instead.
  double elapsed_seconds = 0.0;
  std::optional<double> correlation_overall;
  std::optional<double> correlation_subspace;
  std::optional<double> correlation_nullspace;
  std::vector<ModuleRecord> modules;  // sorted by source module
};

struct ModuleTransferOutcome {
  std::string source_module;
  std::string target_module;
  SimilarityScore similarity;
  DecomposedDelta decomposed;
  TransferredDelta transferred;
  double recompression_residual = 0.0;
};

// Aggregates per-module outcomes; Pearson correlations over the per-module
// (source norm, transferred norm) pairs are absent when undefined.
TransferReport build_report(const std::vector<ModuleTransferOutcome>& outcomes,
                            const ModulePairing& pairing, double elapsed_seconds = 0.0);

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

// Schema "report/1"; numbers serialize with full round-trip precision.
std::string emit_json(const TransferReport& report);
std::string emit_csv(const TransferReport& report);

}  // namespace prolora
