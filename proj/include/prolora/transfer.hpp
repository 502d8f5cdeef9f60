// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "prolora/decompose.hpp"
#include "prolora/linalg.hpp"

namespace prolora {

enum class TransferMode {
  kFull,           // subspace + nullspace projection
  kSubspaceOnly,   // drop the nullspace term
  kNullspaceOnly,  // drop the subspace term
  kCopy,           // delta verbatim
  kCopyProjected,  // delta through the target projectors, no source alignment
  kFactorwise,     // project the up/down factors separately
};

std::string to_string(TransferMode mode);
TransferMode parse_transfer_mode(const std::string& name);

struct TransferredDelta {
  Matrix dense;
  Matrix par_component;
  Matrix perp_component;
  TransferMode mode = TransferMode::kFull;
  std::string source_module;
  std::string target_module;
};

// Projects a decomposed source delta into the target model's column/row
// spaces (par block) and nullspaces (perp block). Accepts modes full,
// subspace_only, nullspace_only.
TransferredDelta transfer_adapter(const DecomposedDelta& decomposed,
                                  const SpectralBases& target_bases, TransferMode mode);

// Copy baselines: verbatim delta, or the delta pushed through the target
// projectors without source-side alignment (modes copy, copy_projected).
TransferredDelta copy_transfer(const Matrix& delta, TransferMode mode,
                               const SpectralBases& target_bases);

// Projects factored adapters without densifying; adapter rank is preserved.
std::pair<Matrix, Matrix> transfer_factorwise(const Matrix& up, const Matrix& down,
                                              const SpectralBases& source_bases,
                                              const SpectralBases& target_bases,
                                              TransferMode mode);

// Cross-dimension transfer through the leading min(r_s, r_t) singular
// directions of each side; nullspace term analogous over the leading shared
// nullspace directions in SVD emission order. Output has the target shape.
TransferredDelta transfer_mismatched(const DecomposedDelta& decomposed,
                                     const SpectralBases& source_bases,
                                     const SpectralBases& target_bases, TransferMode mode);

// Conv kernel (out, in, kh, kw) <-> matrix (out, in*kh*kw), row-major on the
// trailing axes. Values are row-major over the full 4D shape.
Matrix flatten_conv(const std::vector<double>& kernel, const std::vector<Index>& shape);
std::vector<double> unflatten_conv(const Matrix& m, const std::vector<Index>& shape);

// Truncated SVD of the dense transferred delta back to adapter factors.
TruncatedSvd recompress(const TransferredDelta& transferred, Index rank);

}  // namespace prolora
