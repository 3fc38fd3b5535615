// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "layercast/sdp.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace layercast;
using namespace layercast::sdp;

namespace {

CVector random_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd;
  CVector v(n);
  for (int i = 0; i < n; ++i) v[i] = {nd(rng), nd(rng)};
  return v;
}

CMatrix random_hermitian(std::mt19937_64& rng, int n) {
  CMatrix a(n, n);
  std::normal_distribution<double> nd;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = {nd(rng), nd(rng)};
  return 0.5 * (a + a.adjoint());
}

double min_eigenvalue(const CMatrix& x) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(x, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// min sum_j tr X_j  s.t. tr(h_c h_c^H X_{j_c}) >= b_c with random data.
Problem random_trace_problem(std::mt19937_64& rng, int blocks, int n, int rows) {
  Problem p;
  for (int j = 0; j < blocks; ++j) {
    p.block_sizes.push_back(n);
    p.objective.push_back(CMatrix::Identity(n, n));
  }
  std::uniform_real_distribution<double> rhs(0.5, 20.0);
  for (int c = 0; c < rows; ++c) {
    Constraint con;
    const int j = c % blocks;
    const CVector h = random_vector(rng, n);
    con.terms.push_back({j, h * h.adjoint()});
    // Interference from the other blocks, as in the layered constraints.
    for (int k = j + 1; k < blocks; ++k) con.terms.push_back({k, -0.5 * h * h.adjoint()});
    con.rhs = rhs(rng);
    p.constraints.push_back(con);
  }
  return p;
}

}  // namespace

TEST_CASE("scalar LP") {
  Problem p;
  p.block_sizes = {1};
  p.objective = {CMatrix::Ones(1, 1)};
  p.constraints = {{{{0, CMatrix::Ones(1, 1)}}, 1.0}};
  const auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(s.blocks[0](0, 0).real() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("single rank-one constraint has the closed-form minimizer") {
  for (int n : {1, 2, 4, 8}) {
    std::mt19937_64 rng(n);
    CVector h = random_vector(rng, n);
    h *= std::sqrt(2.0) / h.norm();
    Problem p;
    p.block_sizes = {n};
    p.objective = {CMatrix::Identity(n, n)};
    p.constraints = {{{{0, h * h.adjoint()}}, 3.0}};
    const auto s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.objective == doctest::Approx(1.5).epsilon(1e-7));
    const CMatrix expected = (3.0 / 4.0) * h * h.adjoint();
    CHECK((s.blocks[0] - expected).norm() < 1e-6);
  }
}

TEST_CASE("negative trace constraint is infeasible") {
  for (int n : {1, 3}) {
    Problem p;
    p.block_sizes = {n};
    p.objective = {CMatrix::Identity(n, n)};
    p.constraints = {{{{0, -CMatrix::Identity(n, n)}}, 1.0}};
    const auto s = solve(p);
    CHECK(s.status == Status::Infeasible);
  }
}

TEST_CASE("mutually interfering constraints are infeasible") {
  Problem p;
  p.block_sizes = {1, 1};
  p.objective = {CMatrix::Ones(1, 1), CMatrix::Ones(1, 1)};
  p.constraints = {{{{0, CMatrix::Ones(1, 1)}, {1, -2.0 * CMatrix::Ones(1, 1)}}, 1.0},
                   {{{1, CMatrix::Ones(1, 1)}, {0, -2.0 * CMatrix::Ones(1, 1)}}, 1.0}};
  CHECK(solve(p).status == Status::Infeasible);
}

TEST_CASE("zero constraint with positive right-hand side is infeasible") {
  Problem p;
  p.block_sizes = {2};
  p.objective = {CMatrix::Identity(2, 2)};
  p.constraints = {{{{0, CMatrix::Zero(2, 2)}}, 1.0}};
  CHECK(solve(p).status == Status::Infeasible);
}

TEST_CASE("layered single-user problem") {
  // tr(C X1) - 3 tr(C X2) >= 3 and tr(C X2) >= 3 with |h|^2 = 2 gives
  // powers 6 and 1.5.
  CVector h(2);
  h << 1.0, std::complex<double>(0.0, 1.0);
  const CMatrix c = h * h.adjoint();
  Problem p;
  p.block_sizes = {2, 2};
  p.objective = {CMatrix::Identity(2, 2), CMatrix::Identity(2, 2)};
  p.constraints = {{{{0, c}, {1, -3.0 * c}}, 3.0}, {{{1, c}}, 3.0}};
  const auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(7.5).epsilon(1e-7));
  CHECK(s.blocks[0].trace().real() == doctest::Approx(6.0).epsilon(1e-6));
  CHECK(s.blocks[1].trace().real() == doctest::Approx(1.5).epsilon(1e-6));
}

TEST_CASE("optimal solutions meet the accuracy certificate") {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 30; ++k) {
    const int blocks = 1 + k % 4;
    const int n = 2 + k % 5;
    const int rows = 2 + k % 7;
    const auto p = random_trace_problem(rng, blocks, n, rows);
    const auto s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    for (const auto& x : s.blocks) CHECK(min_eigenvalue(x) >= -1e-9);
    const auto lhs = evaluate_constraints(p, s.blocks);
    for (int c = 0; c < p.constraint_count(); ++c)
      CHECK(lhs[c] >= p.constraints[c].rhs - 1e-8 * (1.0 + std::abs(p.constraints[c].rhs)));
    CHECK(s.gap <= 1e-8);
    for (double y : s.dual) CHECK(y >= -1e-9);

    // A constraint touching only its own block bounds that block's trace
    // from below by b / |h|^2.
    double bound = 0.0;
    for (const auto& con : p.constraints)
      if (con.terms.size() == 1)
        bound = std::max(bound, con.rhs / con.terms[0].second.trace().real());
    CHECK(s.objective >= bound - 1e-9 * (1.0 + bound));
  }
}

TEST_CASE("tight tolerances are met or reported, never misread as infeasibility") {
  std::mt19937_64 rng(29);
  for (int k = 0; k < 12; ++k) {
    const auto p = random_trace_problem(rng, 1 + k % 3, 2 + k % 4, 3 + k % 5);
    const auto loose = solve(p);
    REQUIRE(loose.status == Status::Optimal);
    for (double tol : {1e-10, 1e-11, 1e-12}) {
      Options o;
      o.tolerance = tol;
      const auto s = solve(p, o);
      CHECK(s.status != Status::Infeasible);
      if (s.status != Status::Optimal) continue;
      CHECK(s.gap <= tol);
      CHECK(s.objective == doctest::Approx(loose.objective).epsilon(1e-7));
    }
    // Extended precision always gets there on these sizes.
    Options tight;
    tight.tolerance = 1e-12;
    const auto s = solve(p, tight);
    REQUIRE(s.status == Status::Optimal);
    CHECK(std::abs(s.objective - s.dual_objective) <= 1e-11 * (1.0 + std::abs(s.objective)));
  }
}

TEST_CASE("solver is deterministic") {
  std::mt19937_64 rng(5);
  const auto p = random_trace_problem(rng, 3, 4, 6);
  const auto a = solve(p);
  const auto b = solve(p);
  REQUIRE(a.status == Status::Optimal);
  CHECK(a.objective == b.objective);
  for (std::size_t j = 0; j < a.blocks.size(); ++j) CHECK(a.blocks[j] == b.blocks[j]);
}

TEST_CASE("general objective coefficients") {
  // min Re tr(C X) with C positive definite and a trace lower bound: the
  // optimum puts all weight on C's smallest eigenvector.
  std::mt19937_64 rng(9);
  const int n = 4;
  CMatrix c = random_hermitian(rng, n);
  c += (1.0 - min_eigenvalue(c)) * CMatrix::Identity(n, n);
  Problem p;
  p.block_sizes = {n};
  p.objective = {c};
  p.constraints = {{{{0, CMatrix::Identity(n, n)}}, 2.0}};
  const auto s = solve(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(2.0 * min_eigenvalue(c)).epsilon(1e-7));
}

TEST_CASE("tolerance range is validated") {
  Problem p;
  p.block_sizes = {1};
  p.objective = {CMatrix::Ones(1, 1)};
  p.constraints = {{{{0, CMatrix::Ones(1, 1)}}, 1.0}};
  CHECK_THROWS_AS(solve(p, {1e-3, 200}), std::invalid_argument);
  CHECK_THROWS_AS(solve(p, {-1.0, 200}), std::invalid_argument);
  CHECK_THROWS_AS(solve(p, {1e-13, 200}), std::invalid_argument);
  p.constraints[0].terms[0].first = 3;
  CHECK_THROWS_AS(solve(p), std::invalid_argument);
}

TEST_CASE("embedding layout") {
  CHECK(hermitian_embedding(CMatrix::Identity(1, 1)) == Eigen::MatrixXd::Identity(2, 2));
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 1) = {0.0, 1.0};
  a(1, 0) = {0.0, -1.0};
  const auto e = hermitian_embedding(a);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(4, 4);
  expected(0, 3) = -1.0;
  expected(1, 2) = 1.0;
  expected(2, 1) = 1.0;
  expected(3, 0) = -1.0;
  CHECK(e == expected);
  CHECK(e.isApprox(e.transpose()));
}

TEST_CASE("embedding preserves spectra, traces and round trips") {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 20; ++k) {
    const int n = 1 + k % 6;
    const CMatrix a = random_hermitian(rng, n);
    const CMatrix x = random_hermitian(rng, n);
    Eigen::SelfAdjointEigenSolver<CMatrix> ca(a, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ra(hermitian_embedding(a),
                                                      Eigen::EigenvaluesOnly);
    for (int i = 0; i < n; ++i) {
      CHECK(ra.eigenvalues()[2 * i] == doctest::Approx(ca.eigenvalues()[i]).epsilon(1e-10));
      CHECK(ra.eigenvalues()[2 * i + 1] == doctest::Approx(ca.eigenvalues()[i]).epsilon(1e-10));
    }
    const double lhs = (hermitian_embedding(a) * hermitian_embedding(x)).trace();
    CHECK(lhs == doctest::Approx(2.0 * (a * x).trace().real()).epsilon(1e-10));
    CHECK((hermitian_extraction(hermitian_embedding(x)) - x).norm() < 1e-10);
  }
}

TEST_CASE("sparse dump lists every nonzero coefficient") {
  Problem p;
  p.block_sizes = {2};
  p.objective = {CMatrix::Identity(2, 2)};
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 1) = {1.0, 2.0};
  a(1, 0) = {1.0, -2.0};
  p.constraints = {{{{0, a}}, 3.0}};
  std::ostringstream out;
  write_sparse(out, p);
  const std::string text = out.str();
  CHECK(text.find("objective 0 0 0 1 0\n") != std::string::npos);
  CHECK(text.find("objective 0 1 1 1 0\n") != std::string::npos);
  CHECK(text.find("constraint 0 0 0 1 1 2\n") != std::string::npos);
  CHECK(text.find("rhs 0 3\n") != std::string::npos);
}
