// SPDX-License-Identifier: Apache-2.0
#include "layercast/beamform.hpp"

#include "layercast/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace layercast {

namespace {

constexpr double kRankThreshold = 1e-6;
constexpr int kRankReductionCap = 200;

void require_instance(const ProblemInstance& instance, const LayerSelection& selection) {
  instance.validate();
  selection.validate(instance.profile, instance.groups);
}

struct TopEigen {
  double value = 0.0;
  CVector vector;
};

TopEigen top_eigen(const CMatrix& x) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (x + x.adjoint()));
  const Eigen::Index n = x.rows();
  return {es.eigenvalues()[n - 1], es.eigenvectors().col(n - 1)};
}

// Per-user gains |h_u^H w_k|^2 for every unit k.
std::vector<double> gains(const CVector& h, const BeamformerSet& bf) {
  std::vector<double> a;
  a.reserve(bf.vectors.size());
  for (const auto& w : bf.vectors) a.push_back(std::norm(h.dot(w)));
  return a;
}

void require_beamformers(const UnitStructure& units, const BeamformerSet& bf, int antennas) {
  if (static_cast<int>(bf.vectors.size()) != units.unit_count())
    throw std::invalid_argument("expected " + std::to_string(units.unit_count()) +
                                " beamformers, got " + std::to_string(bf.vectors.size()));
  for (const auto& w : bf.vectors)
    if (w.size() != antennas) throw std::invalid_argument("beamformer has the wrong length");
}

void require_plan(const LayerSelection& selection, const VideoProfile& profile,
                  const SuperLayerPlan& plan) {
  const auto expected = build_plan(selection, profile);
  if (expected.partitions != plan.partitions ||
      expected.per_group_counts != plan.per_group_counts)
    throw std::invalid_argument("super-layer plan does not belong to the selection");
}

}  // namespace

double BeamformerSet::power() const {
  double p = 0.0;
  for (const auto& w : vectors) p += w.squaredNorm();
  return p;
}

double PsdSolutionSet::objective() const {
  double t = 0.0;
  for (const auto& x : matrices) t += x.trace().real();
  return t;
}

const char* to_string(PowerMethod method) {
  return method == PowerMethod::RankReduction ? "rank-reduction" : "penalty";
}

double FeasibilityReport::worst_slack() const {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) s = std::min(s, r.slack);
  return s;
}

sdp::Problem build_sdr(const ProblemInstance& instance, const LayerSelection& selection,
                       SchemeKind scheme) {
  require_instance(instance, selection);
  const auto units = unit_structure(selection, instance.profile, scheme);
  const int n = instance.antennas;
  const int L = units.unit_count();

  sdp::Problem p;
  p.block_sizes.assign(L, n);
  p.objective.assign(L, CMatrix::Identity(n, n));
  for (const auto& u : all_users(instance.groups)) {
    const CVector& h = instance.channel.at(u);
    const CMatrix c = h * h.adjoint();
    for (int l = 1; l <= units.per_group_counts[u.group]; ++l) {
      const double gamma = units.thresholds[l - 1];
      sdp::Constraint con;
      con.terms.push_back({l - 1, c});
      for (int k = l + 1; k <= L; ++k) con.terms.push_back({k - 1, -gamma * c});
      con.rhs = gamma * instance.noise_at(u);
      p.constraints.push_back(std::move(con));
    }
  }
  return p;
}

bool is_special_case(const GroupConfig& groups, const LayerSelection& selection,
                     SchemeKind scheme) {
  groups.validate();
  if (selection.group_count() != groups.group_count())
    throw std::invalid_argument("layer selection needs one quality per group");
  std::vector<int> counts = selection.r;
  if (scheme == SchemeKind::QualityBased)
    counts = build_plan(selection, VideoProfile::uniform(selection.max_quality(), 1.0))
                 .per_group_counts;
  int constraints = 0, top = 0;
  for (int g = 0; g < groups.group_count(); ++g) {
    constraints += groups.users[g] * counts[g];
    top = std::max(top, counts[g]);
  }
  return constraints <= top + 2;
}

PsdSolutionSet solve_sdr(const sdp::Problem& problem, SchemeKind scheme,
                         const sdp::Options& options) {
  const auto sol = sdp::solve(problem, options);
  if (sol.status == sdp::Status::Infeasible) throw InfeasibleError("relaxation is infeasible");
  if (sol.status != sdp::Status::Optimal) throw NumericalFailure(sol.message);
  return {sol.blocks, scheme};
}

double rank_one_residual(const CMatrix& x) {
  const double tr = x.trace().real();
  if (tr <= 0.0) return 0.0;
  return std::max(0.0, 1.0 - top_eigen(x).value / tr);
}

double rank_one_residual(const PsdSolutionSet& set) {
  double r = 0.0;
  for (const auto& x : set.matrices) r = std::max(r, rank_one_residual(x));
  return r;
}

int numerical_rank(const CMatrix& x) {
  const double tr = x.trace().real();
  if (tr <= 0.0) return 0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (x + x.adjoint()), Eigen::EigenvaluesOnly);
  int rank = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] > kRankThreshold * tr) ++rank;
  return rank;
}

PsdSolutionSet rank_reduce(const sdp::Problem& problem, const PsdSolutionSet& solution,
                           std::vector<double>* history) {
  const int L = problem.block_count();
  if (static_cast<int>(solution.matrices.size()) != L)
    throw std::invalid_argument("solution has the wrong number of blocks");

  auto factors_of = [](const CMatrix& x) {
    const double tr = x.trace().real();
    if (tr <= 0.0) return CMatrix(x.rows(), 0);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (x + x.adjoint()));
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()[i] > kRankThreshold * tr) keep.push_back(i);
    CMatrix v(x.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
      v.col(k) = std::sqrt(es.eigenvalues()[keep[k]]) * es.eigenvectors().col(keep[k]);
    return v;
  };
  auto rank_sum = [](const std::vector<CMatrix>& v) {
    long s = 0;
    for (const auto& f : v) s += static_cast<long>(f.cols()) * f.cols();
    return s;
  };

  PsdSolutionSet out = solution;
  if (history) history->assign(1, out.objective());
  std::vector<CMatrix> v(L);
  for (int l = 0; l < L; ++l) v[l] = factors_of(out.matrices[l]);
  if (rank_sum(v) <= L + 2) return out;

  const int m = problem.constraint_count();
  for (int iter = 0; iter < kRankReductionCap && rank_sum(v) > L + 2; ++iter) {
    std::vector<int> offset(L + 1, 0);
    for (int l = 0; l < L; ++l) offset[l + 1] = offset[l] + static_cast<int>(v[l].cols() * v[l].cols());
    const int unknowns = offset[L];

    // Real parametrization of Hermitian Delta: diagonal entries, then real
    // and imaginary parts of the strict upper triangle.
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(std::max(m, 1), unknowns);
    for (int c = 0; c < m; ++c) {
      for (const auto& [j, a] : problem.constraints[c].terms) {
        const Eigen::Index g = v[j].cols();
        if (g == 0) continue;
        const CMatrix b = v[j].adjoint() * (0.5 * (a + a.adjoint())) * v[j];
        int col = offset[j];
        for (Eigen::Index i = 0; i < g; ++i) e(c, col++) += b(i, i).real();
        for (Eigen::Index i = 0; i < g; ++i)
          for (Eigen::Index k = i + 1; k < g; ++k) {
            e(c, col++) += 2.0 * b(i, k).real();
            e(c, col++) += 2.0 * b(i, k).imag();
          }
      }
    }
    for (int c = 0; c < m; ++c) {
      const double nrm = e.row(c).norm();
      if (nrm > 0.0) e.row(c) /= nrm;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(e, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double enorm = sv.size() > 0 ? sv[0] : 0.0;
    // Right singular vectors beyond the row count are exact null directions.
    const Eigen::Index last = unknowns - 1;
    const double smallest = last < sv.size() ? sv[last] : 0.0;
    if (smallest > 1e-8 * std::max(enorm, 1e-300))
      throw NoDescentDirection("rank reduction found only the zero direction");
    const Eigen::VectorXd z = svd.matrixV().col(last);

    std::vector<CMatrix> delta(L);
    double dmax = 0.0;
    for (int l = 0; l < L; ++l) {
      const Eigen::Index g = v[l].cols();
      delta[l] = CMatrix::Zero(g, g);
      int col = offset[l];
      for (Eigen::Index i = 0; i < g; ++i) delta[l](i, i) = z[col++];
      for (Eigen::Index i = 0; i < g; ++i)
        for (Eigen::Index k = i + 1; k < g; ++k) {
          const std::complex<double> val(z[col], z[col + 1]);
          col += 2;
          delta[l](i, k) = val;
          delta[l](k, i) = std::conj(val);
        }
      if (g == 0) continue;
      Eigen::SelfAdjointEigenSolver<CMatrix> es(delta[l], Eigen::EigenvaluesOnly);
      for (Eigen::Index i = 0; i < g; ++i)
        if (std::abs(es.eigenvalues()[i]) > std::abs(dmax)) dmax = es.eigenvalues()[i];
    }
    if (dmax == 0.0) throw NoDescentDirection("rank reduction direction has no eigenvalue");

    for (int l = 0; l < L; ++l) {
      const Eigen::Index g = v[l].cols();
      if (g == 0) continue;
      const CMatrix inner = CMatrix::Identity(g, g) - delta[l] / dmax;
      CMatrix x = v[l] * inner * v[l].adjoint();
      out.matrices[l] = 0.5 * (x + x.adjoint());
      v[l] = factors_of(out.matrices[l]);
    }
    if (history) history->push_back(out.objective());
  }
  if (rank_sum(v) > L + 2)
    throw NoDescentDirection("rank reduction did not reach the rank bound");
  // Store the truncated factors so the result is rank one to working
  // precision.
  for (int l = 0; l < L; ++l)
    out.matrices[l] = v[l].cols() == 0 ? CMatrix(CMatrix::Zero(out.matrices[l].rows(),
                                                               out.matrices[l].cols()))
                                       : CMatrix(v[l] * v[l].adjoint());
  if (history) history->back() = out.objective();
  return out;
}

PsdSolutionSet penalty_solve(const sdp::Problem& problem, const PsdSolutionSet& sdr,
                             const PenaltyOptions& options, PenaltyStats* stats) {
  if (!(options.mu0 > 0.0)) throw std::invalid_argument("penalty factor must be positive");
  if (options.max_doublings < 0 || options.inner_iterations < 1)
    throw std::invalid_argument("penalty iteration budget must be positive");
  const int L = problem.block_count();
  if (static_cast<int>(sdr.matrices.size()) != L)
    throw std::invalid_argument("solution has the wrong number of blocks");

  PenaltyStats local;
  PenaltyStats& st = stats ? *stats : local;
  st = {};
  double mu = options.mu0;
  st.final_mu = mu;
  if (rank_one_residual(sdr) <= options.rank_tolerance) return sdr;

  sdp::Problem sub = problem;
  for (int restart = 0; restart <= options.max_doublings; ++restart) {
    st.restarts = restart;
    st.final_mu = mu;
    PsdSolutionSet x = sdr;
    for (int k = 0; k < options.inner_iterations; ++k) {
      for (int l = 0; l < L; ++l) {
        const int n = problem.block_sizes[l];
        const CVector top = top_eigen(x.matrices[l]).vector;
        sub.objective[l] = (1.0 + mu) * CMatrix::Identity(n, n) - mu * top * top.adjoint();
      }
      PsdSolutionSet next = solve_sdr(sub, sdr.scheme, options.sdp);
      ++st.subproblems;

      // Trace changes are measured against the total power: blocks carrying
      // a tiny share of it keep drifting long after the total has settled.
      const double total = x.objective();
      bool rank_one = true, settled = true, stalled = true;
      for (int l = 0; l < L; ++l) {
        const double tr_old = x.matrices[l].trace().real();
        const double tr_new = next.matrices[l].trace().real();
        if (rank_one_residual(next.matrices[l]) > options.rank_tolerance) rank_one = false;
        if (std::abs(tr_new - tr_old) > options.stall_tolerance * (1.0 + total)) settled = false;
        const double diff = (next.matrices[l] - x.matrices[l]).cwiseAbs().maxCoeff();
        if (diff > options.stall_tolerance * (1.0 + tr_old)) stalled = false;
      }
      x = std::move(next);
      if (rank_one && settled) return x;
      if (stalled) break;
      // Out of inner iterations on a rank-one point that is still creeping
      // down: it is feasible and no worse than anything a restart would
      // start from, so keep it.
      if (rank_one && k + 1 == options.inner_iterations) return x;
    }
    mu *= 2.0;
  }
  throw NonConvergence("penalty method did not reach a rank-one point");
}

PsdSolutionSet penalty_solve(const ProblemInstance& instance, const LayerSelection& selection,
                             SchemeKind scheme, double mu0) {
  const auto problem = build_sdr(instance, selection, scheme);
  const auto sdr = solve_sdr(problem, scheme);
  PenaltyOptions opt;
  opt.mu0 = mu0;
  return penalty_solve(problem, sdr, opt);
}

BeamformerSet extract_beamformers(const PsdSolutionSet& solution, double residual_tolerance) {
  BeamformerSet out;
  out.scheme = solution.scheme;
  for (const auto& x : solution.matrices) {
    const double tr = x.trace().real();
    if (!(tr > 0.0) || x.cwiseAbs().maxCoeff() == 0.0) {
      out.vectors.push_back(CVector::Zero(x.rows()));
      continue;
    }
    const double residual = rank_one_residual(x);
    if (residual > residual_tolerance)
      throw RankResidualTooLarge("block has rank-one residual " + std::to_string(residual));
    const auto top = top_eigen(x);
    CVector w = std::sqrt(std::max(top.value, 0.0)) * top.vector;
    Eigen::Index idx = 0;
    w.cwiseAbs().maxCoeff(&idx);
    if (std::abs(w[idx]) > 0.0) w *= std::conj(w[idx]) / std::abs(w[idx]);
    w[idx] = std::abs(w[idx]);
    out.vectors.push_back(std::move(w));
  }
  return out;
}

FeasibilityReport check_feasible(const ProblemInstance& instance, const LayerSelection& selection,
                                 SchemeKind scheme, const BeamformerSet& beamformers,
                                 double slack_tolerance) {
  require_instance(instance, selection);
  const auto units = unit_structure(selection, instance.profile, scheme);
  require_beamformers(units, beamformers, instance.antennas);
  FeasibilityReport report;
  report.feasible = true;
  for (const auto& u : all_users(instance.groups)) {
    const auto a = gains(instance.channel.at(u), beamformers);
    for (int l = 1; l <= units.per_group_counts[u.group]; ++l) {
      double interference = 0.0;
      for (int k = l + 1; k <= units.unit_count(); ++k) interference += a[k - 1];
      SinrRow row;
      row.user = u;
      row.layer = l;
      row.sinr = a[l - 1] / (interference + instance.noise_at(u));
      row.threshold = units.thresholds[l - 1];
      row.slack = row.sinr / row.threshold - 1.0;
      if (!(row.sinr >= row.threshold * (1.0 - slack_tolerance))) report.feasible = false;
      report.rows.push_back(row);
    }
  }
  return report;
}

double feasibility_scale(const ProblemInstance& instance, const LayerSelection& selection,
                         SchemeKind scheme, const BeamformerSet& beamformers) {
  require_instance(instance, selection);
  const auto units = unit_structure(selection, instance.profile, scheme);
  require_beamformers(units, beamformers, instance.antennas);
  double c = 1.0;
  for (const auto& u : all_users(instance.groups)) {
    const auto a = gains(instance.channel.at(u), beamformers);
    for (int l = 1; l <= units.per_group_counts[u.group]; ++l) {
      double interference = 0.0;
      for (int k = l + 1; k <= units.unit_count(); ++k) interference += a[k - 1];
      const double gamma = units.thresholds[l - 1];
      const double margin = a[l - 1] - gamma * interference;
      if (!(margin > 0.0))
        throw NumericalFailure("no uniform power scaling restores feasibility");
      c = std::max(c, gamma * instance.noise_at(u) / margin);
    }
  }
  return c;
}

double sdr_violation(const sdp::Problem& problem, const PsdSolutionSet& solution,
                     double psd_tolerance) {
  if (static_cast<int>(solution.matrices.size()) != problem.block_count())
    throw std::invalid_argument("solution has the wrong number of blocks");
  for (const auto& x : solution.matrices) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (x + x.adjoint()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -psd_tolerance * (1.0 + x.trace().real()))
      return std::numeric_limits<double>::infinity();
  }
  const auto lhs = sdp::evaluate_constraints(problem, solution.matrices);
  double worst = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < problem.constraint_count(); ++c) {
    const double b = problem.constraints[c].rhs;
    worst = std::max(worst, (b - lhs[c]) / (1.0 + std::abs(b)));
  }
  return worst;
}

PowerResult power_min(const ProblemInstance& instance, const LayerSelection& selection,
                      SchemeKind scheme, const PowerOptions& options, const PsdSolutionSet* sdr) {
  const auto problem = build_sdr(instance, selection, scheme);
  PsdSolutionSet relaxed = sdr ? *sdr : solve_sdr(problem, scheme, options.sdp);
  if (static_cast<int>(relaxed.matrices.size()) != problem.block_count())
    throw std::invalid_argument("relaxation solution does not match the problem");
  relaxed.scheme = scheme;

  PowerResult result;
  result.sdr_bound = relaxed.objective();
  if (is_special_case(instance.groups, selection, scheme)) {
    result.method = PowerMethod::RankReduction;
    result.solution = rank_reduce(problem, relaxed);
  } else {
    result.method = PowerMethod::Penalty;
    PenaltyOptions pen = options.penalty;
    pen.sdp = options.sdp;
    result.solution = penalty_solve(problem, relaxed, pen);
  }
  result.rank_one_residual = rank_one_residual(result.solution);
  result.beamformers = extract_beamformers(result.solution, options.extract_tolerance);
  result.scale_factor = feasibility_scale(instance, selection, scheme, result.beamformers);
  if (result.scale_factor > 1.0)
    for (auto& w : result.beamformers.vectors) w *= std::sqrt(result.scale_factor);
  result.power = result.beamformers.power();
  return result;
}

std::vector<double> layer_power_shares(const SuperLayerPlan& plan, const VideoProfile& profile) {
  std::vector<double> share;
  for (int s = 0; s < plan.super_layer_count(); ++s) {
    const auto& range = plan.partitions[s];
    for (int l = range.first; l <= range.last; ++l) {
      double above = 0.0;
      for (int j = l + 1; j <= range.last; ++j) above += profile.rates[j - 1];
      share.push_back(sinr_threshold(profile.rates[l - 1]) * std::exp2(above) /
                      plan.super_thresholds[s]);
    }
  }
  return share;
}

BeamformerSet construct_lb_from_qb(const ProblemInstance& instance,
                                   const LayerSelection& selection, const SuperLayerPlan& plan,
                                   const BeamformerSet& qb, double tolerance) {
  require_instance(instance, selection);
  require_plan(selection, instance.profile, plan);
  if (!check_feasible(instance, selection, SchemeKind::QualityBased, qb, tolerance).feasible)
    throw InfeasibleInput("quality-based beamformers are not feasible");
  const auto share = layer_power_shares(plan, instance.profile);
  BeamformerSet lb;
  lb.scheme = SchemeKind::LayerBased;
  for (int s = 0; s < plan.super_layer_count(); ++s)
    for (int l = plan.partitions[s].first; l <= plan.partitions[s].last; ++l)
      lb.vectors.push_back(std::sqrt(share[l - 1]) * qb.vectors[s]);
  return lb;
}

PsdSolutionSet construct_qb_sdr_from_lb_sdr(const ProblemInstance& instance,
                                            const LayerSelection& selection,
                                            const SuperLayerPlan& plan, const PsdSolutionSet& lb,
                                            double tolerance) {
  require_plan(selection, instance.profile, plan);
  const auto lb_problem = build_sdr(instance, selection, SchemeKind::LayerBased);
  if (!(sdr_violation(lb_problem, lb) <= tolerance))
    throw InfeasibleInput("layer-based relaxation point is not feasible");
  PsdSolutionSet qb;
  qb.scheme = SchemeKind::QualityBased;
  for (const auto& range : plan.partitions) {
    CMatrix x = CMatrix::Zero(instance.antennas, instance.antennas);
    for (int l = range.first; l <= range.last; ++l) x += lb.matrices[l - 1];
    qb.matrices.push_back(std::move(x));
  }
  return qb;
}

PsdSolutionSet construct_lb_sdr_from_qb_sdr(const ProblemInstance& instance,
                                            const LayerSelection& selection,
                                            const SuperLayerPlan& plan, const PsdSolutionSet& qb,
                                            double tolerance) {
  require_plan(selection, instance.profile, plan);
  const auto qb_problem = build_sdr(instance, selection, SchemeKind::QualityBased);
  if (!(sdr_violation(qb_problem, qb) <= tolerance))
    throw InfeasibleInput("quality-based relaxation point is not feasible");
  const auto share = layer_power_shares(plan, instance.profile);
  PsdSolutionSet lb;
  lb.scheme = SchemeKind::LayerBased;
  for (int s = 0; s < plan.super_layer_count(); ++s)
    for (int l = plan.partitions[s].first; l <= plan.partitions[s].last; ++l)
      lb.matrices.push_back(share[l - 1] * qb.matrices[s]);
  return lb;
}

void write_sinr_csv(std::ostream& out, const FeasibilityReport& report) {
  out.precision(12);
  out << "user_group,user,layer,sinr,threshold,slack\n";
  for (const auto& r : report.rows)
    out << r.user.group + 1 << ',' << r.user.member + 1 << ',' << r.layer << ',' << r.sinr << ','
        << r.threshold << ',' << r.slack << '\n';
}

}  // namespace layercast
