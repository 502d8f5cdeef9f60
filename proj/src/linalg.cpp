// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#include "prolora/linalg.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <iostream>
#include <sstream>

namespace prolora {

void validate_weight_matrix(const Matrix& m) {
  if (m.rows() <= 0 || m.cols() <= 0) {
    throw InvalidMatrix("weight matrix must have positive dimensions");
  }
  if (!m.allFinite()) {
    throw InvalidMatrix("weight matrix contains NaN or Inf entries");
  }
}

SvdResult svd_full(const Matrix& m) {
  validate_weight_matrix(m);
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) {
    throw NumericalFailure("SVD did not converge");
  }
  return SvdResult{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Index numerical_rank(const Vector& sigma, Index rows, Index cols, double rel_tol) {
  if (sigma.size() == 0 || sigma[0] <= 0.0) {
    return 0;
  }
  const double cutoff = rel_tol * static_cast<double>(std::max(rows, cols)) * sigma[0];
  Index r = 0;
  while (r < sigma.size() && sigma[r] > cutoff) {
    ++r;
  }
  return r;
}

SpectralBases split_bases(const SvdResult& svd, Index rows, Index cols, double rel_tol) {
  const Index r = numerical_rank(svd.sigma, rows, cols, rel_tol);
  if (r > 0 && r < svd.sigma.size()) {
    const double gap = svd.sigma[r - 1] - svd.sigma[r];
    if (gap <= kDegenerateGapTol * svd.sigma[0]) {
      std::cerr << "warning: degenerate singular values at rank cutoff " << r
                << " (gap " << gap << ", sigma_max " << svd.sigma[0]
                << "); projectors are well-defined, individual bases are not\n";
    }
  }
  SpectralBases b;
  b.u_par = svd.u.leftCols(r);
  b.u_perp = svd.u.rightCols(rows - r);
  b.v_par = svd.v.leftCols(r);
  b.v_perp = svd.v.rightCols(cols - r);
  b.singular_values = svd.sigma;
  b.rank = r;
  b.rows = rows;
  b.cols = cols;
  return b;
}

SpectralBases compute_bases(const Matrix& w, double rel_tol) {
  return split_bases(svd_full(w), w.rows(), w.cols(), rel_tol);
}

Matrix project_onto(const Matrix& basis, const Matrix& m, Side side) {
  if (side == Side::kLeft) {
    if (basis.rows() != m.rows()) {
      std::ostringstream msg;
      msg << "left projection: basis has " << basis.rows() << " rows, matrix has "
          << m.rows();
      throw ShapeError(msg.str());
    }
    if (basis.cols() == 0) {
      return Matrix::Zero(m.rows(), m.cols());
    }
    return basis * (basis.transpose() * m);
  }
  if (basis.rows() != m.cols()) {
    std::ostringstream msg;
    msg << "right projection: basis has " << basis.rows() << " rows, matrix has "
        << m.cols() << " cols";
    throw ShapeError(msg.str());
  }
  if (basis.cols() == 0) {
    return Matrix::Zero(m.rows(), m.cols());
  }
  return (m * basis) * basis.transpose();
}

TruncatedSvd truncated_svd(const Matrix& m, Index k) {
  validate_weight_matrix(m);
  const Index kmax = std::min(m.rows(), m.cols());
  if (k < 0 || k > kmax) {
    std::ostringstream msg;
    msg << "requested rank " << k << " exceeds min(m,n) = " << kmax;
    throw RankError(msg.str());
  }
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw NumericalFailure("SVD did not converge");
  }
  const Vector& sigma = svd.singularValues();
  TruncatedSvd out;
  const Vector root = sigma.head(k).cwiseSqrt();
  out.up = svd.matrixU().leftCols(k) * root.asDiagonal();
  out.down = root.asDiagonal() * svd.matrixV().leftCols(k).transpose();
  out.residual_fro = std::sqrt(sigma.tail(sigma.size() - k).squaredNorm());
  return out;
}

}  // namespace prolora
