// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prolora/similarity.hpp"
#include "prolora/transfer.hpp"

namespace prolora {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kIo = 2;
inline constexpr int kNoMatches = 3;
inline constexpr int kNumerical = 4;
}  // namespace exit_code

struct JobConfig {
  std::filesystem::path source_model;
  std::filesystem::path target_model;
  std::filesystem::path adapter;
  std::filesystem::path output;
  std::filesystem::path report;  // .json or .csv
  double threshold = 0.8;
  TransferMode mode = TransferMode::kFull;
  std::optional<Index> output_rank;  // default: input adapter rank
  double rank_tolerance = kDefaultRankTol;
  CombineRule combine = CombineRule::kMean;
  // Per-module mode routing, first matching glob wins (e.g. non-square
  // modules full, everything else subspace_only).
  std::vector<std::pair<std::string, TransferMode>> overrides;
  unsigned jobs = 0;  // 0: one worker per available core
  bool half_precision_output = false;
};

// Resolve the transfer mode for one module path against the overrides.
TransferMode mode_for_module(const JobConfig& config, const std::string& module_path);

// Score + pair the two checkpoints and write the score matrix and pairing as
// JSON to config.output. Exit 3 when any adapter-bearing source module (all
// source modules if no adapter is given) stays unmatched.
int run_pair(const JobConfig& config, std::ostream& summary, std::ostream& diag);

// Full pipeline: pair, decompose, project, recompress, save adapter + report.
int run_transfer(const JobConfig& config, std::ostream& summary, std::ostream& diag);

// Decomposition-only report (source model + adapter, no transfer) as CSV.
int run_analyze(const JobConfig& config, std::ostream& summary, std::ostream& diag);

// Generate a synthetic checkpoint pair (plus optional adapter) with known
// geometry from a JSON spec, together with a ground-truth JSON.
int run_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir,
              std::ostream& summary, std::ostream& diag);

}  // namespace prolora
