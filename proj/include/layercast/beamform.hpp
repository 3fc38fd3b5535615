// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "layercast/model.hpp"
#include "layercast/sdp.hpp"
#include "layercast/superlayer.hpp"

#include <iosfwd>
#include <vector>

namespace layercast {

struct BeamformerSet {
  std::vector<CVector> vectors;  // one per layer or super-layer, lowest first
  SchemeKind scheme = SchemeKind::LayerBased;

  double power() const;
};

struct PsdSolutionSet {
  std::vector<CMatrix> matrices;
  SchemeKind scheme = SchemeKind::LayerBased;

  double objective() const;  // sum of traces
};

enum class PowerMethod { RankReduction, Penalty };

const char* to_string(PowerMethod method);

struct PenaltyOptions {
  double mu0 = 1.0;
  double rank_tolerance = 1e-6;
  double stall_tolerance = 1e-6;
  int max_doublings = 6;
  int inner_iterations = 50;
  sdp::Options sdp;
};

struct PenaltyStats {
  int subproblems = 0;
  int restarts = 0;
  double final_mu = 0.0;
};

struct PowerOptions {
  sdp::Options sdp;
  PenaltyOptions penalty;
  double extract_tolerance = 1e-4;
};

struct PowerResult {
  BeamformerSet beamformers;
  double power = 0.0;
  double sdr_bound = 0.0;
  PowerMethod method = PowerMethod::RankReduction;
  double rank_one_residual = 0.0;
  /// Uniform power factor applied after extraction to restore exact SINR
  /// feasibility; 1 when none was needed.
  double scale_factor = 1.0;
  PsdSolutionSet solution;
};

struct SinrRow {
  UserIndex user;
  int layer = 0;  // 1-based unit index
  double sinr = 0.0;
  double threshold = 0.0;
  double slack = 0.0;  // sinr / threshold - 1
};

struct FeasibilityReport {
  bool feasible = false;
  std::vector<SinrRow> rows;

  double worst_slack() const;
};

/// One PSD block per unit and one inequality per (user, requested unit):
/// tr(C_u X_l) - Gamma_l sum_{k>l} tr(C_u X_k) >= Gamma_l sigma_u^2.
sdp::Problem build_sdr(const ProblemInstance& instance, const LayerSelection& selection,
                       SchemeKind scheme);

/// True when the number of SINR constraints is at most L_max + 2, the class on
/// which rank reduction reaches a rank-one optimum.
bool is_special_case(const GroupConfig& groups, const LayerSelection& selection,
                     SchemeKind scheme);

/// Solves the relaxation. Throws InfeasibleError or NumericalFailure.
PsdSolutionSet solve_sdr(const sdp::Problem& problem, SchemeKind scheme,
                         const sdp::Options& options = {});

/// 1 - lambda_max / trace; 0 for the zero matrix.
double rank_one_residual(const CMatrix& x);
double rank_one_residual(const PsdSolutionSet& set);

/// Number of eigenvalues above 1e-6 * trace.
int numerical_rank(const CMatrix& x);

/// Drives an optimal relaxation point down to rank one while keeping every
/// constraint value. `history`, if given, receives the objective before the
/// first and after every update.
PsdSolutionSet rank_reduce(const sdp::Problem& problem, const PsdSolutionSet& solution,
                           std::vector<double>* history = nullptr);

/// Convex-concave penalty iteration started from `sdr`, an optimal point of
/// `problem`.
PsdSolutionSet penalty_solve(const sdp::Problem& problem, const PsdSolutionSet& sdr,
                             const PenaltyOptions& options = {}, PenaltyStats* stats = nullptr);

PsdSolutionSet penalty_solve(const ProblemInstance& instance, const LayerSelection& selection,
                             SchemeKind scheme, double mu0 = 1.0);

BeamformerSet extract_beamformers(const PsdSolutionSet& solution, double residual_tolerance = 1e-4);

FeasibilityReport check_feasible(const ProblemInstance& instance, const LayerSelection& selection,
                                 SchemeKind scheme, const BeamformerSet& beamformers,
                                 double slack_tolerance = 1e-6);

/// Smallest c >= 1 such that scaling every beamformer power by c meets every
/// SINR threshold exactly. Throws NumericalFailure when no factor works.
double feasibility_scale(const ProblemInstance& instance, const LayerSelection& selection,
                         SchemeKind scheme, const BeamformerSet& beamformers);

/// Worst relative constraint violation max_c (b_c - lhs_c) / (1 + |b_c|),
/// or +inf when a block has an eigenvalue below -tolerance * (1 + trace).
double sdr_violation(const sdp::Problem& problem, const PsdSolutionSet& solution,
                     double psd_tolerance = 1e-9);

/// Relaxation, then rank reduction on the special class and the penalty
/// method otherwise. `sdr`, if given, must be the relaxation optimum for the
/// same instance and is reused.
PowerResult power_min(const ProblemInstance& instance, const LayerSelection& selection,
                      SchemeKind scheme, const PowerOptions& options = {},
                      const PsdSolutionSet* sdr = nullptr);

/// Share of a super-layer's power given to each of its layers so that the
/// layered SINR chain holds with the super-layer's margin; indexed by layer
/// (0-based, up to the highest requested layer). Sums to 1 per super-layer.
std::vector<double> layer_power_shares(const SuperLayerPlan& plan, const VideoProfile& profile);

BeamformerSet construct_lb_from_qb(const ProblemInstance& instance,
                                   const LayerSelection& selection, const SuperLayerPlan& plan,
                                   const BeamformerSet& qb, double tolerance = 1e-6);

PsdSolutionSet construct_qb_sdr_from_lb_sdr(const ProblemInstance& instance,
                                            const LayerSelection& selection,
                                            const SuperLayerPlan& plan, const PsdSolutionSet& lb,
                                            double tolerance = 1e-6);

PsdSolutionSet construct_lb_sdr_from_qb_sdr(const ProblemInstance& instance,
                                            const LayerSelection& selection,
                                            const SuperLayerPlan& plan, const PsdSolutionSet& qb,
                                            double tolerance = 1e-6);

/// CSV with header user_group,user,layer,sinr,threshold,slack (1-based).
void write_sinr_csv(std::ostream& out, const FeasibilityReport& report);

}  // namespace layercast
