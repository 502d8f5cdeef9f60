// Copyright (c) 2026 prolora contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace prolora {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Matrix contains NaN/Inf or is otherwise unusable as a weight.
class InvalidMatrix : public Error {
 public:
  using Error::Error;
};

// An iterative numerical routine failed to converge.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

// Operand shapes do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Requested rank exceeds what the operand supports.
class RankError : public Error {
 public:
  using Error::Error;
};

// A subspace needed by the operation is empty (rank 0).
class DegenerateSubspace : public Error {
 public:
  using Error::Error;
};

// A model with no modules where at least one is required.
class EmptyModel : public Error {
 public:
  using Error::Error;
};

// Operation invoked with a transfer mode it does not accept.
class ModeError : public Error {
 public:
  using Error::Error;
};

// Malformed archive header or inconsistent tensor layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failure (missing, truncated, unwritable).
class IoError : public Error {
 public:
  using Error::Error;
};

// Lookup of a tensor/module that does not exist.
class KeyError : public Error {
 public:
  using Error::Error;
};

// Invalid or infeasible synthetic generation spec.
class SpecError : public Error {
 public:
  using Error::Error;
};

// Input too large for a deliberately small-scale routine.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Report construction over an empty transfer list.
class EmptyReport : public Error {
 public:
  using Error::Error;
};

}  // namespace prolora
