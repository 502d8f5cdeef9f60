// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "prolora/linalg.hpp"
#include "prolora/synth.hpp"

namespace prolora::test {

inline Matrix random_matrix(Rng& rng, Index rows, Index cols) {
  return rng.gaussian_matrix(rows, cols);
}

// Random matrix with exact rank r and a clean singular-value gap.
inline Matrix random_rank_matrix(Rng& rng, Index rows, Index cols, Index rank) {
  const Matrix q_left = random_orthogonal(rng, rows);
  const Matrix q_right = random_orthogonal(rng, cols);
  Vector sigma = Vector::Zero(std::min(rows, cols));
  for (Index i = 0; i < rank; ++i) {
    sigma[i] = 10.0 * std::pow(0.8, static_cast<double>(i)) + 0.5;
  }
  return q_left.leftCols(rank) * sigma.head(rank).asDiagonal() *
         q_right.leftCols(rank).transpose();
}

inline std::filesystem::path make_temp_dir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("prolora-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<std::byte> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::byte> bytes;
  char c;
  while (in.get(c)) {
    bytes.push_back(static_cast<std::byte>(c));
  }
  return bytes;
}

inline void spit(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

}  // namespace prolora::test
