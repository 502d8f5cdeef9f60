// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prolora/linalg.hpp"

namespace prolora {

// How the left and right subspace similarities are folded into one score.
enum class CombineRule { kMean, kMin };

std::string to_string(CombineRule rule);
CombineRule parse_combine_rule(const std::string& name);

struct SimilarityScore {
  double left = 0.0;      // column-subspace similarity
  double right = 0.0;     // row-subspace similarity
  double combined = 0.0;  // per CombineRule
};

SimilarityScore make_score(double left, double right, CombineRule rule);

// ||a_par^T b_par||_F^2 / min(r_a, r_b): mean squared cosine of the
// principal angles between the two column spans, in [0, 1].
double subspace_similarity(const Matrix& a_par, const Matrix& b_par);

// Left/right similarity between two weight matrices of identical shape
// from their truncated singular bases.
SimilarityScore module_similarity(const SpectralBases& source, const SpectralBases& target,
                                  CombineRule rule = CombineRule::kMean);
SimilarityScore module_similarity(const Matrix& w_s, const Matrix& w_t,
                                  double rel_tol = kDefaultRankTol,
                                  CombineRule rule = CombineRule::kMean);

// Dense score matrix over all (source, target) candidates. Cells are empty
// for shape-incompatible pairs and for modules with no measurable subspace
// (numerical rank 0 on either side).
struct ScoreMatrix {
  std::vector<std::string> source_ids;
  std::vector<std::string> target_ids;
  std::vector<std::vector<std::optional<SimilarityScore>>> cells;  // [source][target]
};

struct ModulePairing {
  struct Pair {
    std::string source;
    std::string target;
    SimilarityScore score;
  };
  std::vector<Pair> pairs;
  std::vector<std::string> unmatched_sources;
  double threshold = 0.0;
};

// Greedy descending-score selection; each source/target used at most once,
// pairs below threshold rejected, ties broken by (source, target) index.
ModulePairing pair_from_scores(const ScoreMatrix& scores, double threshold);

using NamedWeights = std::vector<std::pair<std::string, Matrix>>;

ScoreMatrix score_modules(const NamedWeights& source, const NamedWeights& target,
                          CombineRule rule = CombineRule::kMean,
                          double rel_tol = kDefaultRankTol);

ModulePairing pair_modules(const NamedWeights& source, const NamedWeights& target,
                           double threshold, CombineRule rule = CombineRule::kMean,
                           double rel_tol = kDefaultRankTol);

}  // namespace prolora
