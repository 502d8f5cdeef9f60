// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "prolora/linalg.hpp"

namespace prolora {

// Orthogonal four-block split of an adapter delta against one weight matrix:
// the block inside col(W) x row(W), the block inside the two nullspaces, and
// the two mixed blocks folded into `residual`. par + perp + residual == delta.
struct DecomposedDelta {
  Matrix par;       // P_{U par} * delta * P_{V par}
  Matrix perp;      // P_{U perp} * delta * P_{V perp}
  Matrix residual;  // cross blocks, dropped by the transfer
  double delta_norm = 0.0;
  double par_norm = 0.0;
  double perp_norm = 0.0;
  double residual_norm = 0.0;
};

DecomposedDelta decompose_adapter(const Matrix& delta, const SpectralBases& bases);

}  // namespace prolora
