// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "prolora/errors.hpp"

namespace prolora {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Relative rank tolerance, scaled by max(m,n) * sigma_max.
inline constexpr double kDefaultRankTol = 1e-8;

// Singular-value gap below this fraction of sigma_max makes the rank
// cutoff ill-conditioned; split_bases logs a warning when crossed.
inline constexpr double kDegenerateGapTol = 1e-6;

// Throws InvalidMatrix when m is empty or contains NaN/Inf.
void validate_weight_matrix(const Matrix& m);

struct SvdResult {
  Matrix u;      // m x m orthogonal
  Vector sigma;  // min(m,n), non-increasing
  Matrix v;      // n x n orthogonal
};

// Full SVD, M = U diag(sigma) V^T with square U and V.
SvdResult svd_full(const Matrix& m);

// Count of sigma[i] > rel_tol * max(rows, cols) * sigma[0]; 0 for a zero matrix.
Index numerical_rank(const Vector& sigma, Index rows, Index cols, double rel_tol);

// Orthonormal bases of the four fundamental subspaces of one weight matrix,
// partitioned at the numerical rank.
struct SpectralBases {
  Matrix u_par;   // m x r, column space
  Matrix u_perp;  // m x (m-r), left nullspace
  Matrix v_par;   // n x r, row space
  Matrix v_perp;  // n x (n-r), nullspace
  Vector singular_values;
  Index rank = 0;
  Index rows = 0;
  Index cols = 0;
};

SpectralBases split_bases(const SvdResult& svd, Index rows, Index cols, double rel_tol);

// svd_full + split_bases in one step.
SpectralBases compute_bases(const Matrix& w, double rel_tol = kDefaultRankTol);

enum class Side { kLeft, kRight };

// Applies the projector P = B B^T to M: P*M (left) or M*P (right).
// Computed as factored products, never materializing P.
Matrix project_onto(const Matrix& basis, const Matrix& m, Side side);

struct TruncatedSvd {
  Matrix up;    // m x k
  Matrix down;  // k x n
  double residual_fro = 0.0;
};

// Best rank-k Frobenius approximation M ~= up * down, singular values split
// evenly between the factors; residual is sqrt of the trailing sigma energy.
TruncatedSvd truncated_svd(const Matrix& m, Index k);

}  // namespace prolora
