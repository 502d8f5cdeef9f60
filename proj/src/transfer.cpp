// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#include "prolora/transfer.hpp"

#include <numeric>
#include <sstream>

namespace prolora {

std::string to_string(TransferMode mode) {
  switch (mode) {
    case TransferMode::kFull: return "full";
    case TransferMode::kSubspaceOnly: return "subspace_only";
    case TransferMode::kNullspaceOnly: return "nullspace_only";
    case TransferMode::kCopy: return "copy";
    case TransferMode::kCopyProjected: return "copy_projected";
    case TransferMode::kFactorwise: return "factorwise";
  }
  return "full";
}

TransferMode parse_transfer_mode(const std::string& name) {
  if (name == "full") return TransferMode::kFull;
  if (name == "subspace_only") return TransferMode::kSubspaceOnly;
  if (name == "nullspace_only") return TransferMode::kNullspaceOnly;
  if (name == "copy") return TransferMode::kCopy;
  if (name == "copy_projected") return TransferMode::kCopyProjected;
  if (name == "factorwise") return TransferMode::kFactorwise;
  throw ModeError("unknown transfer mode: " + name);
}

namespace {

void check_shape(Index rows, Index cols, const SpectralBases& bases, const char* what) {
  if (rows != bases.rows || cols != bases.cols) {
    std::ostringstream msg;
    msg << what << ": operand is " << rows << "x" << cols << " but bases are for "
        << bases.rows << "x" << bases.cols;
    throw ShapeError(msg.str());
  }
}

// P_{U par} M P_{V par} without materializing the projectors.
Matrix par_block(const SpectralBases& b, const Matrix& m) {
  return project_onto(b.v_par, project_onto(b.u_par, m, Side::kLeft), Side::kRight);
}

Matrix perp_block(const SpectralBases& b, const Matrix& m) {
  return project_onto(b.v_perp, project_onto(b.u_perp, m, Side::kLeft), Side::kRight);
}

}  // namespace

TransferredDelta transfer_adapter(const DecomposedDelta& decomposed,
                                  const SpectralBases& target_bases, TransferMode mode) {
  if (mode != TransferMode::kFull && mode != TransferMode::kSubspaceOnly &&
      mode != TransferMode::kNullspaceOnly) {
    throw ModeError("transfer_adapter accepts full, subspace_only or nullspace_only, got " +
                    to_string(mode));
  }
  check_shape(decomposed.par.rows(), decomposed.par.cols(), target_bases, "transfer");

  TransferredDelta out;
  out.mode = mode;
  const bool want_par = mode != TransferMode::kNullspaceOnly;
  const bool want_perp = mode != TransferMode::kSubspaceOnly;
  out.par_component = want_par ? par_block(target_bases, decomposed.par)
                               : Matrix::Zero(target_bases.rows, target_bases.cols);
  out.perp_component = want_perp ? perp_block(target_bases, decomposed.perp)
                                 : Matrix::Zero(target_bases.rows, target_bases.cols);
  out.dense = out.par_component + out.perp_component;
  return out;
}

TransferredDelta copy_transfer(const Matrix& delta, TransferMode mode,
                               const SpectralBases& target_bases) {
  if (mode != TransferMode::kCopy && mode != TransferMode::kCopyProjected) {
    throw ModeError("copy_transfer accepts copy or copy_projected, got " + to_string(mode));
  }
  check_shape(delta.rows(), delta.cols(), target_bases, "copy transfer");

  TransferredDelta out;
  out.mode = mode;
  out.par_component = par_block(target_bases, delta);
  out.perp_component = perp_block(target_bases, delta);
  out.dense = mode == TransferMode::kCopy ? delta
                                          : Matrix(out.par_component + out.perp_component);
  return out;
}

std::pair<Matrix, Matrix> transfer_factorwise(const Matrix& up, const Matrix& down,
                                              const SpectralBases& source_bases,
                                              const SpectralBases& target_bases,
                                              TransferMode mode) {
  if (mode != TransferMode::kFull && mode != TransferMode::kFactorwise) {
    throw ModeError("factorwise transfer only supports the full projection");
  }
  if (source_bases.rows != target_bases.rows || source_bases.cols != target_bases.cols) {
    throw ShapeError("factorwise transfer requires matching source/target shapes");
  }
  if (up.rows() != source_bases.rows || down.cols() != source_bases.cols) {
    std::ostringstream msg;
    msg << "factorwise transfer: up is " << up.rows() << "x" << up.cols() << ", down is "
        << down.rows() << "x" << down.cols() << ", model is " << source_bases.rows << "x"
        << source_bases.cols;
    throw ShapeError(msg.str());
  }
  if (up.cols() != down.rows()) {
    throw ShapeError("factorwise transfer: up/down inner dimensions disagree");
  }
  Matrix up_out =
      project_onto(target_bases.u_par, project_onto(source_bases.u_par, up, Side::kLeft),
                   Side::kLeft) +
      project_onto(target_bases.u_perp, project_onto(source_bases.u_perp, up, Side::kLeft),
                   Side::kLeft);
  Matrix down_out =
      project_onto(target_bases.v_par, project_onto(source_bases.v_par, down, Side::kRight),
                   Side::kRight) +
      project_onto(target_bases.v_perp, project_onto(source_bases.v_perp, down, Side::kRight),
                   Side::kRight);
  return {std::move(up_out), std::move(down_out)};
}

TransferredDelta transfer_mismatched(const DecomposedDelta& decomposed,
                                     const SpectralBases& source_bases,
                                     const SpectralBases& target_bases, TransferMode mode) {
  if (mode != TransferMode::kFull && mode != TransferMode::kSubspaceOnly &&
      mode != TransferMode::kNullspaceOnly) {
    throw ModeError("mismatched transfer accepts full, subspace_only or nullspace_only");
  }
  check_shape(decomposed.par.rows(), decomposed.par.cols(), source_bases,
              "mismatched transfer");
  const Index dc = std::min(source_bases.rank, target_bases.rank);
  if (dc == 0) {
    throw DegenerateSubspace("no common subspace direction between source and target");
  }

  TransferredDelta out;
  out.mode = mode;
  out.par_component = Matrix::Zero(target_bases.rows, target_bases.cols);
  out.perp_component = Matrix::Zero(target_bases.rows, target_bases.cols);

  if (mode != TransferMode::kNullspaceOnly) {
    // Coefficients of the subspace block in the leading source directions,
    // re-emitted along the leading target directions.
    const Matrix coeff = source_bases.u_par.leftCols(dc).transpose() * decomposed.par *
                         source_bases.v_par.leftCols(dc);
    out.par_component = target_bases.u_par.leftCols(dc) * coeff *
                        target_bases.v_par.leftCols(dc).transpose();
  }
  if (mode != TransferMode::kSubspaceOnly) {
    const Index dl = std::min(source_bases.rows - source_bases.rank,
                              target_bases.rows - target_bases.rank);
    const Index dr = std::min(source_bases.cols - source_bases.rank,
                              target_bases.cols - target_bases.rank);
    if (dl > 0 && dr > 0) {
      const Matrix coeff = source_bases.u_perp.leftCols(dl).transpose() * decomposed.perp *
                           source_bases.v_perp.leftCols(dr);
      out.perp_component = target_bases.u_perp.leftCols(dl) * coeff *
                           target_bases.v_perp.leftCols(dr).transpose();
    }
  }
  out.dense = out.par_component + out.perp_component;
  return out;
}

Matrix flatten_conv(const std::vector<double>& kernel, const std::vector<Index>& shape) {
  if (shape.size() != 4) {
    throw ShapeError("conv flattening expects a 4D kernel (out, in, kh, kw)");
  }
  const Index out_ch = shape[0];
  const Index fan_in = shape[1] * shape[2] * shape[3];
  if (out_ch <= 0 || fan_in <= 0 ||
      static_cast<std::size_t>(out_ch * fan_in) != kernel.size()) {
    throw ShapeError("conv kernel size does not match its shape");
  }
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(kernel.data(), out_ch, fan_in);
}

std::vector<double> unflatten_conv(const Matrix& m, const std::vector<Index>& shape) {
  if (shape.size() != 4) {
    throw ShapeError("conv unflattening expects a 4D target shape");
  }
  if (m.rows() != shape[0] || m.cols() != shape[1] * shape[2] * shape[3]) {
    throw ShapeError("matrix shape does not match the requested kernel shape");
  }
  std::vector<double> values(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), m.rows(), m.cols()) = m;
  return values;
}

TruncatedSvd recompress(const TransferredDelta& transferred, Index rank) {
  return truncated_svd(transferred.dense, rank);
}

}  // namespace prolora
