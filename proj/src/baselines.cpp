// SPDX-License-Identifier: Apache-2.0
#include "layercast/baselines.hpp"

#include "layercast/errors.hpp"
#include "layercast/superlayer.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace layercast {

namespace {

constexpr int kFixedPointCap = 500;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> group_thresholds(const ProblemInstance& instance,
                                     const LayerSelection& selection) {
  std::vector<double> out;
  for (int q : selection.r) {
    double rate = 0.0;
    for (int l = 0; l < q; ++l) rate += instance.profile.rates[l];
    out.push_back(sinr_threshold(rate));
  }
  return out;
}

CVector top_eigenvector(const CMatrix& s) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (s + s.adjoint()));
  return es.eigenvectors().col(s.rows() - 1);
}

}  // namespace

sdp::Problem build_mgm_sdr(const ProblemInstance& instance, const LayerSelection& selection) {
  instance.validate();
  selection.validate(instance.profile, instance.groups);
  const int G = instance.groups.group_count();
  const int n = instance.antennas;
  const auto gamma = group_thresholds(instance, selection);
  sdp::Problem p;
  p.block_sizes.assign(G, n);
  p.objective.assign(G, CMatrix::Identity(n, n));
  for (const auto& u : all_users(instance.groups)) {
    const CVector& h = instance.channel.at(u);
    const CMatrix c = h * h.adjoint();
    sdp::Constraint con;
    for (int g = 0; g < G; ++g)
      con.terms.push_back({g, g == u.group ? c : CMatrix(-gamma[u.group] * c)});
    con.rhs = gamma[u.group] * instance.noise_at(u);
    p.constraints.push_back(std::move(con));
  }
  return p;
}

bool mgm_powers(const ProblemInstance& instance, const LayerSelection& selection,
                const std::vector<CVector>& directions, std::vector<double>& powers) {
  const int G = instance.groups.group_count();
  if (static_cast<int>(directions.size()) != G)
    throw std::invalid_argument("need one direction per group");
  const auto gamma = group_thresholds(instance, selection);
  const auto users = all_users(instance.groups);

  // a[u][k] = |h_u^H w_k|^2 for unit-norm w_k.
  std::vector<std::vector<double>> a(users.size(), std::vector<double>(G));
  for (std::size_t i = 0; i < users.size(); ++i) {
    const CVector& h = instance.channel.at(users[i]);
    for (int k = 0; k < G; ++k) a[i][k] = std::norm(h.dot(directions[k]));
    if (!(a[i][users[i].group] > 1e-14 * h.squaredNorm())) return false;
  }

  auto update = [&](const std::vector<double>& p, std::vector<double>& next,
                    std::vector<int>& active) {
    next.assign(G, 0.0);
    active.assign(G, -1);
    for (std::size_t i = 0; i < users.size(); ++i) {
      const int g = users[i].group;
      double interference = instance.noise_at(users[i]);
      for (int k = 0; k < G; ++k)
        if (k != g) interference += a[i][k] * p[k];
      const double need = gamma[g] * interference / a[i][g];
      if (active[g] < 0 || need > next[g]) {
        next[g] = need;
        active[g] = static_cast<int>(i);
      }
    }
  };

  std::vector<double> p(G, 0.0), next;
  std::vector<int> active;
  bool converged = false;
  for (int it = 0; it < kFixedPointCap; ++it) {
    update(p, next, active);
    double change = 0.0, scale = 0.0;
    for (int g = 0; g < G; ++g) {
      change = std::max(change, std::abs(next[g] - p[g]));
      scale = std::max(scale, next[g]);
    }
    p = next;
    if (!std::isfinite(scale) || scale > 1e15) return false;
    if (change <= 1e-12 * (1.0 + scale)) {
      converged = true;
      break;
    }
  }

  // Polish: the minimal powers solve the linear system of the active users
  // exactly; accept it only if it is consistent with the fixed point.
  update(p, next, active);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(G, G);
  Eigen::VectorXd rhs(G);
  for (int g = 0; g < G; ++g) {
    const int i = active[g];
    for (int k = 0; k < G; ++k)
      if (k != g) m(g, k) = -gamma[g] * a[i][k] / a[i][g];
    rhs[g] = gamma[g] * instance.noise_at(users[i]) / a[i][g];
  }
  const Eigen::VectorXd exact = m.partialPivLu().solve(rhs);
  bool polished = exact.allFinite() && exact.minCoeff() >= 0.0;
  if (polished) {
    std::vector<double> q(exact.data(), exact.data() + G), check;
    std::vector<int> act;
    update(q, check, act);
    for (int g = 0; g < G; ++g)
      if (std::abs(check[g] - q[g]) > 1e-9 * (1.0 + q[g])) polished = false;
    if (polished) {
      // One more fixed-point application lands on the exact SINR boundary.
      p = check;
      converged = true;
    }
  }
  if (!converged) return false;
  powers = p;
  return true;
}

BaselineResult mgm_power_min(const ProblemInstance& instance, const LayerSelection& selection,
                             int randomizations, std::uint64_t seed,
                             const sdp::Options& options) {
  if (randomizations < 1) throw std::invalid_argument("randomization count must be positive");
  const auto problem = build_mgm_sdr(instance, selection);
  // The relaxation only seeds the randomization and the powers below are
  // exact for whatever directions come out, so near the feasibility edge,
  // where this relaxation is badly scaled, a looser solve is acceptable.
  sdp::Options opts = options;
  auto sol = sdp::solve(problem, opts);
  while (sol.status == sdp::Status::NumericalFailure && opts.tolerance < 1e-6) {
    opts.tolerance = std::min(1e-6, opts.tolerance * 100.0);
    sol = sdp::solve(problem, opts);
  }
  if (sol.status == sdp::Status::Infeasible)
    throw InfeasibleError("multi-group relaxation is infeasible");
  if (sol.status != sdp::Status::Optimal) throw NumericalFailure(sol.message);

  const int G = instance.groups.group_count();
  const int n = instance.antennas;
  BaselineResult best;
  best.power = kInf;
  best.randomizations = randomizations;
  for (const auto& x : sol.blocks) best.sdr_bound += x.trace().real();

  std::vector<CMatrix> roots(G);
  std::vector<CVector> tops(G);
  for (int g = 0; g < G; ++g) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (sol.blocks[g] + sol.blocks[g].adjoint()));
    tops[g] = es.eigenvectors().col(n - 1);
    roots[g] = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  auto consider = [&](std::vector<CVector> dirs) {
    for (auto& d : dirs) {
      const double nrm = d.norm();
      if (!(nrm > 0.0)) return;
      d /= nrm;
    }
    std::vector<double> p;
    if (!mgm_powers(instance, selection, dirs, p)) return;
    double total = 0.0;
    for (double x : p) total += x;
    if (total < best.power) {
      best.power = total;
      best.feasible = true;
      best.vectors.resize(G);
      for (int g = 0; g < G; ++g) best.vectors[g] = std::sqrt(p[g]) * dirs[g];
    }
  };

  consider(tops);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  for (int r = 0; r < randomizations; ++r) {
    std::vector<CVector> dirs(G);
    for (int g = 0; g < G; ++g) {
      CVector xi(n);
      for (int i = 0; i < n; ++i) {
        const double re = nd(rng);
        const double im = nd(rng);
        xi[i] = {re, im};
      }
      dirs[g] = roots[g] * xi;
    }
    consider(std::move(dirs));
  }
  return best;
}

BaselineResult mrt_power_min(const ProblemInstance& instance, const LayerSelection& selection,
                             SchemeKind scheme) {
  instance.validate();
  selection.validate(instance.profile, instance.groups);
  const auto units = unit_structure(selection, instance.profile, scheme);
  const int L = units.unit_count();
  const int n = instance.antennas;

  BaselineResult out;
  std::vector<CVector> dirs(L);
  std::vector<std::vector<UserIndex>> req(L);
  for (int l = 1; l <= L; ++l) {
    req[l - 1] = unit_requesters(units, l, instance.groups);
    CMatrix s = CMatrix::Zero(n, n);
    for (const auto& u : req[l - 1]) s += instance.channel.at(u) * instance.channel.at(u).adjoint();
    dirs[l - 1] = top_eigenvector(s);
  }

  std::vector<double> p(L, 0.0);
  for (int l = L; l >= 1; --l) {
    double need = 0.0;
    for (const auto& u : req[l - 1]) {
      const CVector& h = instance.channel.at(u);
      const double a = std::norm(h.dot(dirs[l - 1]));
      if (!(a > 1e-14 * h.squaredNorm())) {
        out.power = kInf;
        out.feasible = false;
        return out;
      }
      double interference = instance.noise_at(u);
      for (int k = l + 1; k <= L; ++k) interference += std::norm(h.dot(dirs[k - 1])) * p[k - 1];
      need = std::max(need, units.thresholds[l - 1] * interference / a);
    }
    p[l - 1] = need;
  }
  out.feasible = true;
  for (int l = 0; l < L; ++l) {
    out.vectors.push_back(std::sqrt(p[l]) * dirs[l]);
    out.power += p[l];
  }
  return out;
}

}  // namespace layercast
