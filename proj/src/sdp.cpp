// SPDX-License-Identifier: Apache-2.0
#include "layercast/sdp.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace layercast::sdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

void Problem::validate() const {
  if (block_sizes.empty()) throw std::invalid_argument("SDP needs at least one block");
  for (int n : block_sizes)
    if (n < 1) throw std::invalid_argument("SDP block sizes must be positive");
  if (objective.size() != block_sizes.size())
    throw std::invalid_argument("SDP objective needs one coefficient per block");
  for (int j = 0; j < block_count(); ++j) {
    if (objective[j].rows() != block_sizes[j] || objective[j].cols() != block_sizes[j])
      throw std::invalid_argument("SDP objective coefficient has wrong dimension");
    if (!objective[j].allFinite()) throw std::invalid_argument("SDP objective is not finite");
  }
  for (const auto& c : constraints) {
    if (!std::isfinite(c.rhs)) throw std::invalid_argument("SDP right-hand side is not finite");
    for (const auto& [j, a] : c.terms) {
      if (j < 0 || j >= block_count())
        throw std::invalid_argument("SDP constraint refers to a missing block");
      if (a.rows() != block_sizes[j] || a.cols() != block_sizes[j])
        throw std::invalid_argument("SDP constraint coefficient has wrong dimension");
      if (!a.allFinite()) throw std::invalid_argument("SDP constraint is not finite");
    }
  }
}

MatrixXd hermitian_embedding(const CMatrix& a) {
  const Eigen::Index n = a.rows();
  MatrixXd e(2 * n, 2 * n);
  e.topLeftCorner(n, n) = a.real();
  e.topRightCorner(n, n) = -a.imag();
  e.bottomLeftCorner(n, n) = a.imag();
  e.bottomRightCorner(n, n) = a.real();
  return e;
}

CMatrix hermitian_extraction(const MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() % 2 != 0)
    throw std::invalid_argument("embedded matrix must be square with even dimension");
  const Eigen::Index n = a.rows() / 2;
  const MatrixXd re = 0.5 * (a.topLeftCorner(n, n) + a.bottomRightCorner(n, n));
  const MatrixXd im = 0.5 * (a.bottomLeftCorner(n, n) - a.topRightCorner(n, n));
  CMatrix out(n, n);
  out.real() = re;
  out.imag() = im;
  return CMatrix(0.5 * (out + out.adjoint()));
}

std::vector<double> evaluate_constraints(const Problem& problem, const std::vector<CMatrix>& x) {
  std::vector<double> lhs;
  lhs.reserve(problem.constraints.size());
  for (const auto& c : problem.constraints) {
    double v = 0.0;
    for (const auto& [j, a] : c.terms) v += (a.cwiseProduct(x.at(j).transpose())).sum().real();
    lhs.push_back(v);
  }
  return lhs;
}

void write_sparse(std::ostream& out, const Problem& problem) {
  problem.validate();
  out.precision(17);
  out << "# layercast sparse SDP: minimize sum Re tr(C_j X_j), rows are >= constraints\n";
  out << "# blocks " << problem.block_count() << " constraints " << problem.constraint_count()
      << "\n";
  out << "# sizes";
  for (int n : problem.block_sizes) out << ' ' << n;
  out << '\n';
  auto emit = [&out](const std::string& prefix, const CMatrix& a) {
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index c = r; c < a.cols(); ++c) {
        const auto v = 0.5 * (a(r, c) + std::conj(a(c, r)));
        if (v == std::complex<double>(0.0, 0.0)) continue;
        out << prefix << ' ' << r << ' ' << c << ' ' << v.real() << ' ' << v.imag() << '\n';
      }
  };
  for (int j = 0; j < problem.block_count(); ++j)
    emit("objective " + std::to_string(j), problem.objective[j]);
  for (int i = 0; i < problem.constraint_count(); ++i) {
    for (const auto& [j, a] : problem.constraints[i].terms)
      emit("constraint " + std::to_string(i) + ' ' + std::to_string(j), a);
    out << "rhs " << i << ' ' << problem.constraints[i].rhs << '\n';
  }
}


namespace {

constexpr double kStepFraction = 0.98;

// Tolerances below this are out of reach in double precision; the solver
// then runs in extended precision.
constexpr double kExtendedBelow = 1e-10;

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Real symmetric form of one block after scaling. Every constraint
// coefficient on this block is stored as sum_p d_p v_p v_p^T with the
// columns of V grouped by constraint.
template <class T>
struct RealBlock {
  int n = 0;
  Mat<T> c;
  Mat<T> v;
  Vec<T> d;
  std::vector<int> owner;
};

template <class T>
struct RealProblem {
  std::vector<RealBlock<T>> blocks;
  Vec<T> b;
  std::vector<int> rows;  // original constraint index of each kept row
  std::vector<double> row_norm;
  double beta = 1.0;
  double gamma = 1.0;

  int m() const { return static_cast<int>(b.size()); }
};

template <class T>
T inner(const Mat<T>& a, const Mat<T>& b) {
  return a.cwiseProduct(b).sum();
}

template <class T>
Mat<T> sym(const Mat<T>& a) {
  return T(0.5) * (a + a.transpose());
}

// Builds the scaled real problem. Returns false when a constraint with
// all-zero coefficients demands a positive right-hand side.
template <class T>
bool build_real(const Problem& p, RealProblem<T>& rp) {
  const int nb = p.block_count();
  const int m_all = p.constraint_count();

  std::vector<std::vector<MatrixXd>> emb(m_all);
  std::vector<double> norms(m_all, 0.0);
  for (int i = 0; i < m_all; ++i) {
    for (const auto& [j, a] : p.constraints[i].terms) {
      const CMatrix h = 0.5 * (a + a.adjoint());
      MatrixXd e = 0.5 * hermitian_embedding(h);
      norms[i] += e.squaredNorm();
      emb[i].push_back(std::move(e));
    }
    norms[i] = std::sqrt(norms[i]);
  }

  double max_rhs = 0.0;
  for (int i = 0; i < m_all; ++i) {
    const double scale = std::max(1.0, std::abs(p.constraints[i].rhs));
    if (norms[i] <= 1e-14 * scale) {
      if (p.constraints[i].rhs > 0.0) return false;
      continue;
    }
    rp.rows.push_back(i);
    max_rhs = std::max(max_rhs, std::abs(p.constraints[i].rhs / norms[i]));
  }
  rp.beta = max_rhs > 0.0 ? max_rhs : 1.0;

  const int m = static_cast<int>(rp.rows.size());
  rp.b.resize(m);
  rp.row_norm.resize(m);
  for (int k = 0; k < m; ++k) {
    const int i = rp.rows[k];
    rp.row_norm[k] = norms[i];
    rp.b[k] = T(p.constraints[i].rhs) / T(norms[i]) / T(rp.beta);
  }

  rp.blocks.resize(nb);
  double cmax = 0.0;
  for (int j = 0; j < nb; ++j) {
    auto& blk = rp.blocks[j];
    blk.n = 2 * p.block_sizes[j];
    const CMatrix h = 0.5 * (p.objective[j] + p.objective[j].adjoint());
    const MatrixXd c = 0.5 * hermitian_embedding(h);
    cmax = std::max(cmax, c.norm());
    blk.c = c.cast<T>();
  }
  rp.gamma = cmax > 0.0 ? cmax : 1.0;
  for (auto& blk : rp.blocks) blk.c /= T(rp.gamma);

  std::vector<std::vector<Vec<T>>> cols(nb);
  std::vector<std::vector<T>> weights(nb);
  for (int k = 0; k < m; ++k) {
    const int i = rp.rows[k];
    for (std::size_t t = 0; t < p.constraints[i].terms.size(); ++t) {
      const int j = p.constraints[i].terms[t].first;
      Eigen::SelfAdjointEigenSolver<Mat<T>> es(emb[i][t].cast<T>());
      const Vec<T>& ev = es.eigenvalues();
      const T emax = ev.cwiseAbs().maxCoeff();
      if (emax == T(0)) continue;
      for (Eigen::Index q = 0; q < ev.size(); ++q) {
        if (std::abs(ev[q]) <= T(1e-13) * emax) continue;
        cols[j].push_back(es.eigenvectors().col(q));
        weights[j].push_back(ev[q] / T(rp.row_norm[k]));
        rp.blocks[j].owner.push_back(k);
      }
    }
  }
  for (int j = 0; j < nb; ++j) {
    auto& blk = rp.blocks[j];
    const int count = static_cast<int>(cols[j].size());
    blk.v.resize(blk.n, count);
    blk.d.resize(count);
    for (int q = 0; q < count; ++q) {
      blk.v.col(q) = cols[j][q];
      blk.d[q] = weights[j][q];
    }
  }
  return true;
}

template <class T>
Vec<T> apply_a(const RealProblem<T>& rp, const std::vector<Mat<T>>& x) {
  Vec<T> out = Vec<T>::Zero(rp.m());
  for (std::size_t j = 0; j < rp.blocks.size(); ++j) {
    const auto& blk = rp.blocks[j];
    if (blk.v.cols() == 0) continue;
    const Vec<T> quad = blk.v.cwiseProduct(x[j] * blk.v).colwise().sum().transpose();
    for (Eigen::Index q = 0; q < quad.size(); ++q) out[blk.owner[q]] += blk.d[q] * quad[q];
  }
  return out;
}

template <class T>
Mat<T> apply_adjoint(const RealBlock<T>& blk, const Vec<T>& y) {
  if (blk.v.cols() == 0) return Mat<T>::Zero(blk.n, blk.n);
  Vec<T> s(blk.v.cols());
  for (Eigen::Index q = 0; q < s.size(); ++q) s[q] = blk.d[q] * y[blk.owner[q]];
  return blk.v * s.asDiagonal() * blk.v.transpose();
}

// Any factor F with F F^T = a; falls back to a symmetric square root when
// Cholesky breaks down on a nearly singular iterate.
template <class T>
Mat<T> factor(const Mat<T>& a) {
  Eigen::LLT<Mat<T>> llt(a);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Mat<T>> es(a);
  const Vec<T> s = es.eigenvalues().cwiseMax(std::numeric_limits<T>::min()).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal();
}

template <class T>
struct Scaling {
  Mat<T> g;  // W = G G^T, G^T Z G = G^{-1} X G^{-T} = diag(lambda)
  Mat<T> w;
  Vec<T> lambda;
};

template <class T>
Scaling<T> nt_scaling(const Mat<T>& x, const Mat<T>& z) {
  const Mat<T> l = factor(x);
  const Mat<T> r = factor(z);
  Eigen::JacobiSVD<Mat<T>> svd(r.transpose() * l, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Scaling<T> s;
  s.lambda = svd.singularValues().cwiseMax(std::numeric_limits<T>::min());
  s.g = l * svd.matrixV() * s.lambda.cwiseSqrt().cwiseInverse().asDiagonal();
  s.w = s.g * s.g.transpose();
  return s;
}

template <class T>
T max_step_psd(const Vec<T>& lambda, const Mat<T>& d_scaled) {
  const Vec<T> inv = lambda.cwiseSqrt().cwiseInverse();
  const Mat<T> t = sym<T>(inv.asDiagonal() * d_scaled * inv.asDiagonal());
  Eigen::SelfAdjointEigenSolver<Mat<T>> es(t, Eigen::EigenvaluesOnly);
  const T mn = es.eigenvalues().minCoeff();
  return mn < T(0) ? T(-1) / mn : std::numeric_limits<T>::infinity();
}

template <class T>
T max_step_lp(const Vec<T>& v, const Vec<T>& dv) {
  T a = std::numeric_limits<T>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < T(0)) a = std::min(a, -v[i] / dv[i]);
  return a;
}

template <class T>
struct Direction {
  std::vector<Mat<T>> dx, dz, dx_scaled, dz_scaled;
  Vec<T> dy, dxl, dzl;
};

enum class Outcome { Converged, Farkas, Stalled };

template <class T>
struct Iterate {
  std::vector<Mat<T>> x, z;
  Vec<T> xl, zl, y;
  int iterations = 0;
};

template <class T>
Outcome interior_point(const RealProblem<T>& rp, const Options& opt, Iterate<T>& it) {
  const int nb = static_cast<int>(rp.blocks.size());
  const int m = rp.m();
  int dim = m;
  for (const auto& blk : rp.blocks) dim += blk.n;
  const T tol = T(opt.tolerance);
  std::optional<Iterate<T>> accepted;
  auto stalled = [&]() {
    if (!accepted) return Outcome::Stalled;
    it = *accepted;
    return Outcome::Converged;
  };

  const T xi = std::max(T(10), std::sqrt(T(dim)));
  it.x.clear();
  it.z.clear();
  for (const auto& blk : rp.blocks) {
    it.x.push_back(xi * Mat<T>::Identity(blk.n, blk.n));
    it.z.push_back(xi * Mat<T>::Identity(blk.n, blk.n));
  }
  it.xl = Vec<T>::Constant(m, xi);
  it.zl = Vec<T>::Constant(m, xi);
  it.y = Vec<T>::Zero(m);

  const T bnorm = rp.b.norm();
  T cnorm = 0;
  for (const auto& blk : rp.blocks) cnorm += blk.c.squaredNorm();
  cnorm = std::sqrt(cnorm);

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    it.iterations = iter;
    const Vec<T> ax = apply_a(rp, it.x);
    const Vec<T> rpv = rp.b - ax + it.xl;
    std::vector<Mat<T>> rd(nb);
    T rd_norm2 = 0, pobj = 0, xz = 0;
    for (int j = 0; j < nb; ++j) {
      rd[j] = rp.blocks[j].c - apply_adjoint(rp.blocks[j], it.y) - it.z[j];
      rd_norm2 += rd[j].squaredNorm();
      pobj += inner(rp.blocks[j].c, it.x[j]);
      xz += inner(it.x[j], it.z[j]);
    }
    const Vec<T> rdl = it.y - it.zl;
    rd_norm2 += rdl.squaredNorm();
    xz += it.xl.dot(it.zl);
    const T dobj = rp.b.dot(it.y);
    const T mu = xz / T(dim);

    const T pinf = rpv.norm() / (1 + bnorm);
    const T dinf = std::sqrt(rd_norm2) / (1 + cnorm);
    const T gap = std::abs(pobj - dobj) / (1 + std::abs(pobj) + std::abs(dobj));
    if (pinf <= tol && dinf <= tol && gap <= tol) {
      // Aim a little below the tolerance so the unscaled certificate also
      // meets it; fall back to this iterate if the extra steps fail.
      const T aim = T(0.25) * tol;
      if (pinf <= aim && dinf <= aim && gap <= aim) return Outcome::Converged;
      if (!accepted) accepted = it;
    }

    if (m > 0 && dobj > T(0)) {
      const Vec<T> ty = it.y / dobj;
      if (ty.minCoeff() >= T(-1e-10)) {
        T lmax = -std::numeric_limits<T>::infinity();
        for (int j = 0; j < nb; ++j) {
          Eigen::SelfAdjointEigenSolver<Mat<T>> es(apply_adjoint(rp.blocks[j], ty),
                                                   Eigen::EigenvaluesOnly);
          lmax = std::max(lmax, es.eigenvalues().maxCoeff());
        }
        if (lmax <= T(1e-8)) return Outcome::Farkas;
      }
    }

    std::vector<Scaling<T>> sc(nb);
    for (int j = 0; j < nb; ++j) sc[j] = nt_scaling(it.x[j], it.z[j]);

    Mat<T> schur = Mat<T>::Zero(m, m);
    for (int j = 0; j < nb; ++j) {
      const auto& blk = rp.blocks[j];
      const Eigen::Index pc = blk.v.cols();
      if (pc == 0) continue;
      const Mat<T> pm = blk.v.transpose() * sc[j].w * blk.v;
      for (Eigen::Index p = 0; p < pc; ++p)
        for (Eigen::Index q = 0; q < pc; ++q)
          schur(blk.owner[p], blk.owner[q]) += blk.d[p] * blk.d[q] * pm(p, q) * pm(p, q);
    }
    const Vec<T> wl = it.xl.cwiseQuotient(it.zl);
    schur.diagonal() += wl;
    schur = sym(schur);
    Eigen::LLT<Mat<T>> chol(schur);
    Eigen::LDLT<Mat<T>> ldlt;
    const bool use_llt = chol.info() == Eigen::Success;
    if (!use_llt) {
      const T reg = T(1e-14) * std::max(T(1), schur.diagonal().cwiseAbs().maxCoeff());
      ldlt.compute(schur + reg * Mat<T>::Identity(m, m));
    }
    auto solve_schur = [&](const Vec<T>& r) -> Vec<T> {
      return use_llt ? Vec<T>(chol.solve(r)) : Vec<T>(ldlt.solve(r));
    };

    std::vector<Mat<T>> wrw(nb);
    for (int j = 0; j < nb; ++j) wrw[j] = sc[j].w * rd[j] * sc[j].w;

    // rhs[j] is the right-hand side of the scaled complementarity equation;
    // lp_rhs the corresponding LP term.
    auto direction = [&](const std::vector<Mat<T>>& rhs, const Vec<T>& lp_rhs) {
      Direction<T> d;
      std::vector<Mat<T>> gsg(nb), s(nb), tmp(nb);
      for (int j = 0; j < nb; ++j) {
        const Vec<T>& lam = sc[j].lambda;
        s[j] = rhs[j];
        for (Eigen::Index a = 0; a < lam.size(); ++a)
          for (Eigen::Index b = 0; b < lam.size(); ++b) s[j](a, b) *= T(2) / (lam[a] + lam[b]);
        gsg[j] = sc[j].g * s[j] * sc[j].g.transpose();
        tmp[j] = gsg[j] - wrw[j];
      }
      const Vec<T> ql = lp_rhs.cwiseQuotient(it.zl);
      const Vec<T> r = rpv - apply_a(rp, tmp) + ql - wl.cwiseProduct(rdl);
      d.dy = m > 0 ? solve_schur(r) : Vec<T>();
      d.dx.resize(nb);
      d.dz.resize(nb);
      d.dx_scaled.resize(nb);
      d.dz_scaled.resize(nb);
      auto expand = [&] {
        for (int j = 0; j < nb; ++j) {
          d.dz[j] = sym<T>(rd[j] - apply_adjoint(rp.blocks[j], d.dy));
          d.dx[j] = sym<T>(gsg[j] - sc[j].w * d.dz[j] * sc[j].w);
        }
        d.dzl = rdl + d.dy;
        d.dxl = ql - wl.cwiseProduct(d.dzl);
        return Vec<T>(rpv - apply_a(rp, d.dx) + d.dxl);
      };
      // Iterative refinement: near the boundary the Schur system is badly
      // conditioned and its error shows up directly as primal infeasibility.
      Vec<T> err = expand();
      for (int pass = 0; pass < 2 && m > 0; ++pass) {
        const Vec<T> before = d.dy;
        d.dy += solve_schur(err);
        Vec<T> next = expand();
        if (!(next.norm() < err.norm())) {
          d.dy = before;
          expand();
          break;
        }
        err = std::move(next);
      }
      for (int j = 0; j < nb; ++j) {
        d.dz_scaled[j] = sym<T>(sc[j].g.transpose() * d.dz[j] * sc[j].g);
        d.dx_scaled[j] = sym<T>(s[j] - d.dz_scaled[j]);
      }
      return d;
    };
    auto steps = [&](const Direction<T>& d) {
      T ap = max_step_lp(it.xl, d.dxl), ad = max_step_lp(it.zl, d.dzl);
      for (int j = 0; j < nb; ++j) {
        ap = std::min(ap, max_step_psd(sc[j].lambda, d.dx_scaled[j]));
        ad = std::min(ad, max_step_psd(sc[j].lambda, d.dz_scaled[j]));
      }
      return std::pair{ap, ad};
    };

    std::vector<Mat<T>> rhs(nb);
    for (int j = 0; j < nb; ++j) rhs[j] = -Mat<T>(sc[j].lambda.cwiseAbs2().asDiagonal());
    const Direction<T> pred = direction(rhs, Vec<T>(-it.xl.cwiseProduct(it.zl)));
    auto [ap_a, ad_a] = steps(pred);
    ap_a = std::min(T(1), ap_a);
    ad_a = std::min(T(1), ad_a);
    T xz_aff = 0;
    for (int j = 0; j < nb; ++j)
      xz_aff += inner<T>(it.x[j] + ap_a * pred.dx[j], it.z[j] + ad_a * pred.dz[j]);
    xz_aff += (it.xl + ap_a * pred.dxl).dot(it.zl + ad_a * pred.dzl);
    const T mu_aff = xz_aff / T(dim);
    const T sigma = std::clamp(T(std::pow(std::max(mu_aff, T(0)) / mu, T(3))), T(0), T(1));

    for (int j = 0; j < nb; ++j) {
      const Mat<T> corr = sym<T>(pred.dx_scaled[j] * pred.dz_scaled[j]);
      rhs[j] = sigma * mu * Mat<T>::Identity(rp.blocks[j].n, rp.blocks[j].n) -
               Mat<T>(sc[j].lambda.cwiseAbs2().asDiagonal()) - corr;
    }
    const Vec<T> lp_rhs = Vec<T>::Constant(m, sigma * mu) - it.xl.cwiseProduct(it.zl) -
                          pred.dxl.cwiseProduct(pred.dzl);
    const Direction<T> dir = direction(rhs, lp_rhs);
    auto [ap, ad] = steps(dir);
    ap = std::min(T(1), T(kStepFraction) * ap);
    ad = std::min(T(1), T(kStepFraction) * ad);
    if (!(ap > T(1e-12)) && !(ad > T(1e-12))) return stalled();
    if (!std::isfinite(ap) || !std::isfinite(ad)) return stalled();

    for (int j = 0; j < nb; ++j) {
      it.x[j] = sym<T>(it.x[j] + ap * dir.dx[j]);
      it.z[j] = sym<T>(it.z[j] + ad * dir.dz[j]);
    }
    it.xl += ap * dir.dxl;
    it.zl += ad * dir.dzl;
    it.y += ad * dir.dy;
    if (!it.y.allFinite()) return stalled();
  }
  it.iterations = opt.max_iterations;
  return stalled();
}

// Minimizes the uniform slack t needed to satisfy every normalized
// constraint inside a large trace ball. An optimum clearly above the
// accuracy of the solve means no feasible point exists in that ball.
bool phase_one_infeasible(const Problem& problem, const Options& opt) {
  Problem p1;
  p1.block_sizes = problem.block_sizes;
  p1.block_sizes.push_back(1);
  for (int n : problem.block_sizes) p1.objective.push_back(CMatrix::Zero(n, n));
  p1.objective.push_back(CMatrix::Ones(1, 1));

  double max_rhs = 0.0;
  std::vector<double> norms;
  for (const auto& c : problem.constraints) {
    double s = 0.0;
    for (const auto& [j, a] : c.terms) s += a.squaredNorm();
    norms.push_back(std::sqrt(s));
    if (norms.back() > 0.0) max_rhs = std::max(max_rhs, std::abs(c.rhs) / norms.back());
  }
  if (max_rhs == 0.0) max_rhs = 1.0;
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    if (norms[i] == 0.0) continue;
    const double s = 1.0 / (norms[i] * max_rhs);
    Constraint c;
    for (const auto& [j, a] : problem.constraints[i].terms) c.terms.push_back({j, s * a});
    c.terms.push_back({problem.block_count(), CMatrix::Ones(1, 1)});
    c.rhs = problem.constraints[i].rhs * s;
    p1.constraints.push_back(std::move(c));
  }
  Constraint ball;
  for (int j = 0; j < problem.block_count(); ++j)
    ball.terms.push_back({j, -CMatrix::Identity(problem.block_sizes[j], problem.block_sizes[j])});
  ball.rhs = -1e6;
  p1.constraints.push_back(std::move(ball));

  RealProblem<double> rp;
  build_real(p1, rp);
  Iterate<double> it;
  Options o = opt;
  o.tolerance = std::max(opt.tolerance, 1e-9);
  if (interior_point(rp, o, it) != Outcome::Converged) return false;
  const double t = it.x.back()(0, 0) * rp.beta;
  return t > std::max(1e-7, 10.0 * o.tolerance * rp.beta);
}

template <class T>
Outcome run(const Problem& problem, const Options& options, RealProblem<T>& rp, Iterate<T>& it,
            bool& zero_row_infeasible) {
  zero_row_infeasible = !build_real(problem, rp);
  if (zero_row_infeasible) return Outcome::Farkas;
  return interior_point(rp, options, it);
}

template <class T>
void extract(const Problem& problem, const RealProblem<T>& rp, const Iterate<T>& it,
             Solution& sol) {
  for (int j = 0; j < problem.block_count(); ++j)
    sol.blocks.push_back(rp.beta * hermitian_extraction(it.x[j].template cast<double>()));
  sol.dual.assign(problem.constraints.size(), 0.0);
  for (int k = 0; k < rp.m(); ++k)
    sol.dual[rp.rows[k]] = static_cast<double>(T(rp.gamma) * it.y[k] / T(rp.row_norm[k]));
}

}  // namespace

Solution solve(const Problem& problem, const Options& options) {
  if (!(options.tolerance >= 1e-12 && options.tolerance <= 1e-4))
    throw std::invalid_argument("SDP tolerance must lie in [1e-12, 1e-4]");
  if (options.max_iterations < 1) throw std::invalid_argument("iteration cap must be positive");
  problem.validate();

  Solution sol;
  bool zero_row = false;
  Outcome outcome;
  if (options.tolerance < kExtendedBelow) {
    RealProblem<long double> rp;
    Iterate<long double> it;
    outcome = run(problem, options, rp, it, zero_row);
    sol.iterations = it.iterations;
    if (outcome == Outcome::Converged) extract(problem, rp, it, sol);
  } else {
    RealProblem<double> rp;
    Iterate<double> it;
    outcome = run(problem, options, rp, it, zero_row);
    sol.iterations = it.iterations;
    if (outcome == Outcome::Converged) extract(problem, rp, it, sol);
  }
  if (zero_row) {
    sol.status = Status::Infeasible;
    sol.message = "a constraint with zero coefficients has a positive right-hand side";
    return sol;
  }
  if (outcome != Outcome::Converged) {
    if (outcome == Outcome::Farkas || phase_one_infeasible(problem, options)) {
      sol.status = Status::Infeasible;
      sol.message = outcome == Outcome::Farkas ? "dual ray certifies infeasibility"
                                               : "phase-one slack stays positive";
    } else {
      sol.status = Status::NumericalFailure;
      sol.message = "interior-point method did not reach the requested accuracy";
    }
    return sol;
  }

  sol.status = Status::Optimal;
  sol.objective = 0.0;
  for (int j = 0; j < problem.block_count(); ++j)
    sol.objective += (problem.objective[j].cwiseProduct(sol.blocks[j].transpose())).sum().real();
  sol.dual_objective = 0.0;
  for (std::size_t i = 0; i < problem.constraints.size(); ++i)
    sol.dual_objective += sol.dual[i] * problem.constraints[i].rhs;
  sol.gap = std::abs(sol.objective - sol.dual_objective) /
            (1.0 + std::abs(sol.objective) + std::abs(sol.dual_objective));
  const auto lhs = evaluate_constraints(problem, sol.blocks);
  sol.max_violation = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i)
    sol.max_violation = std::max(sol.max_violation, problem.constraints[i].rhs - lhs[i]);
  return sol;
}

}  // namespace layercast::sdp
