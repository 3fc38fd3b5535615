// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "layercast/model.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace layercast::sdp {

/// One linear inequality sum_j Re tr(A_j X_j) >= rhs. Blocks that do not
/// appear in `terms` have a zero coefficient.
struct Constraint {
  std::vector<std::pair<int, CMatrix>> terms;
  double rhs = 0.0;
};

/// minimize sum_j Re tr(C_j X_j) over Hermitian PSD blocks X_j subject to the
/// constraints.
struct Problem {
  std::vector<int> block_sizes;
  std::vector<CMatrix> objective;
  std::vector<Constraint> constraints;

  int block_count() const { return static_cast<int>(block_sizes.size()); }
  int constraint_count() const { return static_cast<int>(constraints.size()); }
  /// Throws std::invalid_argument on mismatched dimensions or non-finite data.
  void validate() const;
};

enum class Status { Optimal, Infeasible, NumericalFailure };

const char* to_string(Status status);

struct Solution {
  Status status = Status::NumericalFailure;
  std::vector<CMatrix> blocks;
  std::vector<double> dual;  // one multiplier per constraint, >= 0
  double objective = 0.0;
  double dual_objective = 0.0;
  double max_violation = 0.0;  // max_c (b_c - lhs_c)_+
  double gap = 0.0;            // relative duality gap
  int iterations = 0;
  std::string message;
};

struct Options {
  double tolerance = 1e-8;
  int max_iterations = 200;
};

Solution solve(const Problem& problem, const Options& options = {});

/// [[Re A, -Im A], [Im A, Re A]].
Eigen::MatrixXd hermitian_embedding(const CMatrix& a);

/// Inverse of hermitian_embedding; a real symmetric matrix that is not an
/// exact embedding is first projected onto embeddings by averaging.
CMatrix hermitian_extraction(const Eigen::MatrixXd& a);

/// Left-hand side of every constraint at the given blocks.
std::vector<double> evaluate_constraints(const Problem& problem, const std::vector<CMatrix>& x);

/// Sparse text dump. Header lines start with '#'. Body lines are
///   objective <block> <row> <col> <re> <im>
///   constraint <index> <block> <row> <col> <re> <im>
///   rhs <index> <value>
/// with 0-based indices; only the upper triangle of each coefficient is
/// written.
void write_sparse(std::ostream& out, const Problem& problem);

}  // namespace layercast::sdp
