// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference for the factored transfer path: materializes the
// m x m and n x n projectors explicitly and multiplies them out. Deliberately
// small-scale; the fast path must agree with this within 1e-8.
#pragma once

#include "prolora/linalg.hpp"
#include "prolora/transfer.hpp"

namespace prolora::test {

inline Matrix dense_projector(const Matrix& basis, Index dim) {
  if (basis.cols() == 0) {
    return Matrix::Zero(dim, dim);
  }
  return basis * basis.transpose();
}

inline Matrix dense_oracle_transfer(const Matrix& delta, const Matrix& w_s,
                                    const Matrix& w_t, TransferMode mode,
                                    double rel_tol = kDefaultRankTol) {
  if (delta.rows() > 256 || delta.cols() > 256) {
    throw SizeError("dense oracle is limited to 256x256 operands");
  }
  const SpectralBases sb = compute_bases(w_s, rel_tol);
  const SpectralBases tb = compute_bases(w_t, rel_tol);
  const Matrix pu_s = dense_projector(sb.u_par, sb.rows);
  const Matrix qu_s = dense_projector(sb.u_perp, sb.rows);
  const Matrix pv_s = dense_projector(sb.v_par, sb.cols);
  const Matrix qv_s = dense_projector(sb.v_perp, sb.cols);
  const Matrix pu_t = dense_projector(tb.u_par, tb.rows);
  const Matrix qu_t = dense_projector(tb.u_perp, tb.rows);
  const Matrix pv_t = dense_projector(tb.v_par, tb.cols);
  const Matrix qv_t = dense_projector(tb.v_perp, tb.cols);

  const Matrix par_s = pu_s * delta * pv_s;
  const Matrix perp_s = qu_s * delta * qv_s;
  switch (mode) {
    case TransferMode::kFull:
      return pu_t * par_s * pv_t + qu_t * perp_s * qv_t;
    case TransferMode::kSubspaceOnly:
      return pu_t * par_s * pv_t;
    case TransferMode::kNullspaceOnly:
      return qu_t * perp_s * qv_t;
    case TransferMode::kCopy:
      return delta;
    case TransferMode::kCopyProjected:
      return pu_t * delta * pv_t + qu_t * delta * qv_t;
    case TransferMode::kFactorwise:
      break;
  }
  throw ModeError("dense oracle has no factorwise route");
}

}  // namespace prolora::test
