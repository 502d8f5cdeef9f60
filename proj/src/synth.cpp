// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#include "prolora/synth.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace prolora {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 1e-300) {
    u1 = uniform();
  }
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Matrix Rng::gaussian_matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = gaussian();
    }
  }
  return m;
}

Matrix random_orthogonal(Rng& rng, Index n) {
  const Matrix g = rng.gaussian_matrix(n, n);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) {
      q.col(j) = -q.col(j);
    }
  }
  return q;
}

void validate_spec(const SynthModuleSpec& spec) {
  std::ostringstream msg;
  if (spec.rows <= 0 || spec.cols <= 0) {
    throw SpecError("module '" + spec.name + "': dimensions must be positive");
  }
  const Index dim_min = std::min(spec.rows, spec.cols);
  if (spec.rank_s < 1 || spec.rank_t < 1 || spec.rank_s > dim_min || spec.rank_t > dim_min) {
    msg << "module '" << spec.name << "': ranks must lie in [1, " << dim_min << "]";
    throw SpecError(msg.str());
  }
  const Index p = std::min(spec.rank_s, spec.rank_t);
  if (static_cast<Index>(spec.principal_angles.size()) != p) {
    msg << "module '" << spec.name << "': expected " << p << " principal angles, got "
        << spec.principal_angles.size();
    throw SpecError(msg.str());
  }
  Index angled = 0;
  for (double theta : spec.principal_angles) {
    if (!(theta >= 0.0) || theta > std::numbers::pi / 2 + 1e-12) {
      throw SpecError("module '" + spec.name + "': angles must lie in [0, pi/2]");
    }
    if (theta > 0.0) {
      ++angled;
    }
  }
  const Index max_rank = std::max(spec.rank_s, spec.rank_t);
  if (static_cast<Index>(spec.singular_value_profile.size()) < max_rank) {
    msg << "module '" << spec.name << "': singular value profile needs at least "
        << max_rank << " entries";
    throw SpecError(msg.str());
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double s : spec.singular_value_profile) {
    if (!(s > 0.0) || s >= prev) {
      throw SpecError("module '" + spec.name +
                      "': singular value profile must be strictly decreasing and positive");
    }
    prev = s;
  }
  // Each nonzero angle consumes one fresh direction, and extra target
  // directions beyond the shared ones consume more; all must fit.
  const Index extras = spec.rank_t - p;
  const Index needed = spec.rank_s + angled + extras;
  if (needed > spec.rows || needed > spec.cols) {
    msg << "module '" << spec.name << "': geometry needs " << needed
        << " orthogonal directions but shape is " << spec.rows << "x" << spec.cols;
    throw SpecError(msg.str());
  }
}

namespace {

struct SideBases {
  Matrix source_par;
  Matrix source_perp;
  Matrix target_par;
  Matrix target_perp;
};

// Build source/target bases sharing one ambient frame with the requested
// principal angles between the par subspaces.
SideBases build_side(Rng& rng, Index dim, Index rank_s, Index rank_t,
                     const std::vector<double>& angles) {
  const Matrix frame = random_orthogonal(rng, dim);
  const Index p = std::min(rank_s, rank_t);
  const Index extras = rank_t - p;

  SideBases out;
  out.source_par = frame.leftCols(rank_s);
  out.source_perp = frame.rightCols(dim - rank_s);

  out.target_par.resize(dim, rank_t);
  out.target_perp.resize(dim, dim - rank_t);
  Index partner = rank_s;  // next fresh frame column for an angled direction
  Index perp_col = 0;
  for (Index i = 0; i < p; ++i) {
    const double theta = angles[static_cast<std::size_t>(i)];
    if (theta > 0.0) {
      out.target_par.col(i) =
          std::cos(theta) * frame.col(i) + std::sin(theta) * frame.col(partner);
      out.target_perp.col(perp_col++) =
          -std::sin(theta) * frame.col(i) + std::cos(theta) * frame.col(partner);
      ++partner;
    } else {
      out.target_par.col(i) = frame.col(i);
    }
  }
  for (Index j = 0; j < extras; ++j) {
    out.target_par.col(p + j) = frame.col(partner + j);
  }
  // Complement: source directions the target does not keep, then the unused
  // tail of the frame.
  for (Index i = p; i < rank_s; ++i) {
    out.target_perp.col(perp_col++) = frame.col(i);
  }
  for (Index j = partner + extras; j < dim; ++j) {
    out.target_perp.col(perp_col++) = frame.col(j);
  }
  return out;
}

Vector padded_sigma(const std::vector<double>& profile, Index rank, Index dim_min) {
  Vector sigma = Vector::Zero(dim_min);
  for (Index i = 0; i < rank; ++i) {
    sigma[i] = profile[static_cast<std::size_t>(i)];
  }
  return sigma;
}

}  // namespace

ModulePairTruth generate_model_pair(const SynthModuleSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  Rng rng(seed);
  const SideBases u = build_side(rng, spec.rows, spec.rank_s, spec.rank_t,
                                 spec.principal_angles);
  const SideBases v = build_side(rng, spec.cols, spec.rank_s, spec.rank_t,
                                 spec.principal_angles);

  ModulePairTruth truth;
  const Index dim_min = std::min(spec.rows, spec.cols);

  truth.source_bases.u_par = u.source_par;
  truth.source_bases.u_perp = u.source_perp;
  truth.source_bases.v_par = v.source_par;
  truth.source_bases.v_perp = v.source_perp;
  truth.source_bases.singular_values = padded_sigma(spec.singular_value_profile,
                                                    spec.rank_s, dim_min);
  truth.source_bases.rank = spec.rank_s;
  truth.source_bases.rows = spec.rows;
  truth.source_bases.cols = spec.cols;

  truth.target_bases.u_par = u.target_par;
  truth.target_bases.u_perp = u.target_perp;
  truth.target_bases.v_par = v.target_par;
  truth.target_bases.v_perp = v.target_perp;
  truth.target_bases.singular_values = padded_sigma(spec.singular_value_profile,
                                                    spec.rank_t, dim_min);
  truth.target_bases.rank = spec.rank_t;
  truth.target_bases.rows = spec.rows;
  truth.target_bases.cols = spec.cols;

  truth.w_s = u.source_par *
              truth.source_bases.singular_values.head(spec.rank_s).asDiagonal() *
              v.source_par.transpose();
  truth.w_t = u.target_par *
              truth.target_bases.singular_values.head(spec.rank_t).asDiagonal() *
              v.target_par.transpose();

  double sum = 0.0;
  for (double theta : spec.principal_angles) {
    const double c = std::cos(theta);
    sum += c * c;
  }
  truth.expected_similarity = sum / static_cast<double>(spec.principal_angles.size());
  return truth;
}

GeneratedAdapter generate_adapter(const SpectralBases& bases, const AdapterCoeffs& coeffs) {
  const Index r = bases.rank;
  const Index mp = bases.rows - r;
  const Index np = bases.cols - r;
  auto check = [&](const Matrix& m, Index rows, Index cols, const char* what) {
    if (m.size() != 0 && (m.rows() != rows || m.cols() != cols)) {
      std::ostringstream msg;
      msg << what << " coefficients must be " << rows << "x" << cols << ", got "
          << m.rows() << "x" << m.cols();
      throw ShapeError(msg.str());
    }
  };
  check(coeffs.par, r, r, "par");
  check(coeffs.perp, mp, np, "perp");
  check(coeffs.cross_par_perp, r, np, "cross par/perp");
  check(coeffs.cross_perp_par, mp, r, "cross perp/par");

  GeneratedAdapter out;
  out.expected.par = Matrix::Zero(bases.rows, bases.cols);
  out.expected.perp = Matrix::Zero(bases.rows, bases.cols);
  out.expected.residual = Matrix::Zero(bases.rows, bases.cols);
  if (coeffs.par.size() != 0) {
    out.expected.par = bases.u_par * coeffs.par * bases.v_par.transpose();
    out.expected.par_norm = coeffs.par.norm();
  }
  if (coeffs.perp.size() != 0) {
    out.expected.perp = bases.u_perp * coeffs.perp * bases.v_perp.transpose();
    out.expected.perp_norm = coeffs.perp.norm();
  }
  double cross_sq = 0.0;
  if (coeffs.cross_par_perp.size() != 0) {
    out.expected.residual += bases.u_par * coeffs.cross_par_perp * bases.v_perp.transpose();
    cross_sq += coeffs.cross_par_perp.squaredNorm();
  }
  if (coeffs.cross_perp_par.size() != 0) {
    out.expected.residual += bases.u_perp * coeffs.cross_perp_par * bases.v_par.transpose();
    cross_sq += coeffs.cross_perp_par.squaredNorm();
  }
  out.expected.residual_norm = std::sqrt(cross_sq);
  out.expected.delta_norm =
      std::sqrt(out.expected.par_norm * out.expected.par_norm +
                out.expected.perp_norm * out.expected.perp_norm + cross_sq);
  out.delta = out.expected.par + out.expected.perp + out.expected.residual;
  return out;
}

}  // namespace prolora
