// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#include "prolora/decompose.hpp"

#include <sstream>

namespace prolora {

DecomposedDelta decompose_adapter(const Matrix& delta, const SpectralBases& bases) {
  if (delta.rows() != bases.rows || delta.cols() != bases.cols) {
    std::ostringstream msg;
    msg << "decompose: delta is " << delta.rows() << "x" << delta.cols()
        << " but bases were computed for " << bases.rows << "x" << bases.cols;
    throw ShapeError(msg.str());
  }
  DecomposedDelta out;
  out.par = project_onto(bases.v_par, project_onto(bases.u_par, delta, Side::kLeft),
                         Side::kRight);
  out.perp = project_onto(bases.v_perp, project_onto(bases.u_perp, delta, Side::kLeft),
                          Side::kRight);
  out.residual = delta - out.par - out.perp;
  out.delta_norm = delta.norm();
  out.par_norm = out.par.norm();
  out.perp_norm = out.perp.norm();
  out.residual_norm = out.residual.norm();
  return out;
}

}  // namespace prolora
