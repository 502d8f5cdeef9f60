// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#include "prolora/similarity.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

namespace prolora {

std::string to_string(CombineRule rule) {
  return rule == CombineRule::kMean ? "mean" : "min";
}

CombineRule parse_combine_rule(const std::string& name) {
  if (name == "mean") return CombineRule::kMean;
  if (name == "min") return CombineRule::kMin;
  throw Error("unknown combine rule: " + name);
}

SimilarityScore make_score(double left, double right, CombineRule rule) {
  SimilarityScore s;
  s.left = left;
  s.right = right;
  s.combined = rule == CombineRule::kMean ? 0.5 * (left + right) : std::min(left, right);
  return s;
}

double subspace_similarity(const Matrix& a_par, const Matrix& b_par) {
  if (a_par.rows() != b_par.rows()) {
    std::ostringstream msg;
    msg << "subspace similarity: ambient dimensions differ (" << a_par.rows()
        << " vs " << b_par.rows() << ")";
    throw ShapeError(msg.str());
  }
  const Index ra = a_par.cols();
  const Index rb = b_par.cols();
  if (ra == 0 || rb == 0) {
    throw DegenerateSubspace("subspace similarity of a rank-0 subspace is undefined");
  }
  const double cross = (a_par.transpose() * b_par).squaredNorm();
  return cross / static_cast<double>(std::min(ra, rb));
}

SimilarityScore module_similarity(const SpectralBases& source, const SpectralBases& target,
                                  CombineRule rule) {
  if (source.rows != target.rows || source.cols != target.cols) {
    std::ostringstream msg;
    msg << "module similarity: shapes differ (" << source.rows << "x" << source.cols
        << " vs " << target.rows << "x" << target.cols << ")";
    throw ShapeError(msg.str());
  }
  const double left = subspace_similarity(source.u_par, target.u_par);
  const double right = subspace_similarity(source.v_par, target.v_par);
  return make_score(left, right, rule);
}

SimilarityScore module_similarity(const Matrix& w_s, const Matrix& w_t, double rel_tol,
                                  CombineRule rule) {
  if (w_s.rows() != w_t.rows() || w_s.cols() != w_t.cols()) {
    throw ShapeError("module similarity requires identical shapes");
  }
  return module_similarity(compute_bases(w_s, rel_tol), compute_bases(w_t, rel_tol), rule);
}

ModulePairing pair_from_scores(const ScoreMatrix& scores, double threshold) {
  if (scores.source_ids.empty()) {
    throw EmptyModel("pairing requires at least one source module");
  }
  struct Candidate {
    double combined;
    std::size_t source;
    std::size_t target;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < scores.source_ids.size(); ++i) {
    for (std::size_t j = 0; j < scores.target_ids.size(); ++j) {
      const auto& cell = scores.cells[i][j];
      if (cell && cell->combined >= threshold) {
        candidates.push_back({cell->combined, i, j});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.combined, a.source, a.target) < std::tie(a.combined, b.source, b.target);
  });

  ModulePairing pairing;
  pairing.threshold = threshold;
  std::vector<bool> source_used(scores.source_ids.size(), false);
  std::vector<bool> target_used(scores.target_ids.size(), false);
  for (const Candidate& c : candidates) {
    if (source_used[c.source] || target_used[c.target]) {
      continue;
    }
    source_used[c.source] = true;
    target_used[c.target] = true;
    pairing.pairs.push_back(
        {scores.source_ids[c.source], scores.target_ids[c.target], *scores.cells[c.source][c.target]});
  }
  std::sort(pairing.pairs.begin(), pairing.pairs.end(),
            [](const auto& a, const auto& b) { return a.source < b.source; });
  for (std::size_t i = 0; i < scores.source_ids.size(); ++i) {
    if (!source_used[i]) {
      pairing.unmatched_sources.push_back(scores.source_ids[i]);
    }
  }
  return pairing;
}

ScoreMatrix score_modules(const NamedWeights& source, const NamedWeights& target,
                          CombineRule rule, double rel_tol) {
  ScoreMatrix scores;
  scores.source_ids.reserve(source.size());
  scores.target_ids.reserve(target.size());
  std::vector<SpectralBases> source_bases;
  std::vector<SpectralBases> target_bases;
  for (const auto& [id, w] : source) {
    scores.source_ids.push_back(id);
    source_bases.push_back(compute_bases(w, rel_tol));
  }
  for (const auto& [id, w] : target) {
    scores.target_ids.push_back(id);
    target_bases.push_back(compute_bases(w, rel_tol));
  }
  scores.cells.assign(source.size(),
                      std::vector<std::optional<SimilarityScore>>(target.size()));
  for (std::size_t i = 0; i < source_bases.size(); ++i) {
    for (std::size_t j = 0; j < target_bases.size(); ++j) {
      const auto& s = source_bases[i];
      const auto& t = target_bases[j];
      if (s.rows != t.rows || s.cols != t.cols || s.rank == 0 || t.rank == 0) {
        continue;
      }
      scores.cells[i][j] = module_similarity(s, t, rule);
    }
  }
  return scores;
}

ModulePairing pair_modules(const NamedWeights& source, const NamedWeights& target,
                           double threshold, CombineRule rule, double rel_tol) {
  if (source.empty()) {
    throw EmptyModel("pairing requires at least one source module");
  }
  return pair_from_scores(score_modules(source, target, rule, rel_tol), threshold);
}

}  // namespace prolora
