// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace layercast {

// Base class for every error raised by the library. Invalid arguments keep
// using std::invalid_argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The relaxation (and therefore the original problem) has no feasible point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// The interior-point solver ran out of iterations or lost positive
// definiteness before reaching the requested accuracy.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

// Rank reduction found only the zero solution of its homogeneous system while
// the rank bound was still violated.
class NoDescentDirection : public Error {
 public:
  using Error::Error;
};

// The penalty iteration exhausted its restart budget without reaching rank one.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

class RankResidualTooLarge : public Error {
 public:
  using Error::Error;
};

// A cross-scheme construction was handed a point that is not feasible for its
// own problem.
class InfeasibleInput : public Error {
 public:
  using Error::Error;
};

}  // namespace layercast
