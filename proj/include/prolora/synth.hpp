// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "prolora/decompose.hpp"
#include "prolora/linalg.hpp"

namespace prolora {

// Deterministic RNG with fixed sampling algorithms, so identical seeds give
// bit-identical streams independent of the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();   // [0, 1)
  double gaussian();  // standard normal, Box-Muller
  Matrix gaussian_matrix(Index rows, Index cols);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Haar-ish orthogonal matrix: QR of a Gaussian draw with a fixed sign
// convention (positive R diagonal).
Matrix random_orthogonal(Rng& rng, Index n);

// One synthetic module pair with exactly known subspace geometry.
struct SynthModuleSpec {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  Index rank_s = 0;
  Index rank_t = 0;
  std::vector<double> principal_angles;        // radians in [0, pi/2], size min(rank_s, rank_t)
  std::vector<double> singular_value_profile;  // strictly decreasing positive, >= max rank values
};

// Throws SpecError when the requested geometry cannot exist in the shape.
void validate_spec(const SynthModuleSpec& spec);

struct ModulePairTruth {
  Matrix w_s;
  Matrix w_t;
  SpectralBases source_bases;  // constructed, not recovered via SVD
  SpectralBases target_bases;
  double expected_similarity = 0.0;  // sum cos^2(theta) / min(rank_s, rank_t), both sides
};

ModulePairTruth generate_model_pair(const SynthModuleSpec& spec, std::uint64_t seed);

// Coefficient blocks of an adapter in a model's own singular frame. Empty
// matrices stand for zero blocks.
struct AdapterCoeffs {
  Matrix par;            // r x r
  Matrix perp;           // (m-r) x (n-r)
  Matrix cross_par_perp;  // r x (n-r)
  Matrix cross_perp_par;  // (m-r) x r
};

struct GeneratedAdapter {
  Matrix delta;
  DecomposedDelta expected;  // exact blocks; norms equal coefficient norms
};

GeneratedAdapter generate_adapter(const SpectralBases& bases, const AdapterCoeffs& coeffs);

}  // namespace prolora
