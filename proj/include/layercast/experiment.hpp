// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "layercast/model.hpp"
#include "layercast/selection.hpp"
#include "layercast/serialize.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace layercast {

enum class StudyKind { PowerMin, UtilityMax };

/// What varies from one sweep point to the next.
///   antennas     N
///   quality      r of `sweep_group`
///   groups       G; group g gets U of group 1, distance 2g-1 and r = L+1-g
///   users        U_g of every group
///   budget       power budget, linear
///   budget_db    power budget in dB (10 log10)
enum class SweepParameter { Antennas, Quality, Groups, Users, Budget, BudgetDb };

std::string to_string(SweepParameter p);
SweepParameter sweep_parameter_from_string(const std::string& name);

struct ExperimentConfig {
  std::string name = "custom";
  StudyKind kind = StudyKind::PowerMin;
  GroupConfig groups;
  VideoProfile profile;
  double noise_power = 1.0;
  int antennas = 12;
  LayerSelection selection;  // power minimization only
  double budget_db = 30.0;   // utility maximization when the budget is not swept
  SweepParameter sweep = SweepParameter::Antennas;
  int sweep_group = 0;  // 0-based, quality sweeps only
  std::vector<double> sweep_values;
  int ensemble_size = 100;
  std::uint64_t seed = 1;
  /// powermin: lb, qb, lb_sdr, qb_sdr, mgm, mrt
  /// utilitymax: greedy, exhaustive, mgm, mrt
  std::vector<std::string> methods;
  double sdp_tolerance = 1e-8;
  int mgm_randomizations = 100;
  bool paper_scale = false;
  int threads = 0;      // per-state workers; 0 = hardware concurrency
  bool timing = false;  // adds wall-clock columns, which are not reproducible

  /// Throws std::invalid_argument on anything a solve would reject later.
  void validate() const;
};

/// One fully specified point of a sweep.
struct SweepPoint {
  double value = 0.0;
  GroupConfig groups;
  int antennas = 1;
  LayerSelection selection;
  double budget = 0.0;  // linear
};

SweepPoint sweep_point(const ExperimentConfig& config, double value);

std::vector<std::string> preset_names();
/// Configuration reproducing one figure panel. Desk scale uses 100 states and
/// N <= 12; paper scale restores 1000 states and the full sizes.
ExperimentConfig preset(const std::string& name, bool paper_scale = false);

void to_json(Json& j, const ExperimentConfig& c);
/// Missing fields keep their defaults; a "preset" field starts from that
/// preset before applying the remaining fields.
void from_json(const Json& j, ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

enum class RunStatus { Ok, Infeasible, Failed };
std::string to_string(RunStatus status);

struct MethodRun {
  RunStatus status = RunStatus::Failed;
  double power = 0.0;  // meaningful when status is Ok
  double seconds = 0.0;
};

struct PowerSweepPoint {
  SweepPoint point;
  std::vector<std::vector<MethodRun>> runs;  // [state][method], methods as configured
};

/// Every method on every state of every sweep point.
std::vector<PowerSweepPoint> powermin_runs(const ExperimentConfig& config);

struct UtilityRun {
  SweepPoint point;
  std::string method;
  RunStatus status = RunStatus::Failed;
  SelectionResult result;  // filled when status is Ok
  double seconds = 0.0;
};

std::vector<UtilityRun> utilitymax_runs(const ExperimentConfig& config);

/// Header: sweep_value,method,mean_power,mean_power_db,std_power,
/// feasible_count,infeasible_count,failed_count[,mean_runtime_s]
void run_powermin(const ExperimentConfig& config, std::ostream& csv);

/// Header: sweep_value,budget,method,status,utility,worst_case_power,
/// selection[,runtime_s]
void run_utilitymax(const ExperimentConfig& config, std::ostream& csv);

struct CheckOutcome {
  std::string name;
  bool passed = false;
  int cases = 0;
  double worst = 0.0;  // largest observed value of the checked quantity
  double limit = 0.0;  // the bound it must stay within
  std::string detail;  // first failure, if any
};

struct VerifyReport {
  std::uint64_t seed = 0;
  std::vector<CheckOutcome> checks;

  bool passed() const;
  /// Deterministic text: one line per check, then a summary line.
  void write(std::ostream& out) const;
};

/// A (G, U, r) combination from the certified special-case tables.
struct SpecialCaseRow {
  std::vector<int> users;
  LayerSelection selection;
  bool layer_table = false;    // certified for the layer-based scheme
  bool quality_table = false;  // certified for the quality-based scheme
};

/// Every row of both tables expanded for an L-layer video.
std::vector<SpecialCaseRow> special_case_rows(int layers);

/// Runs the invariant suite on instances sampled from `seed`.
VerifyReport verify(std::uint64_t seed, int threads = 0);

/// Relaxation of the first state at the first sweep point, in the sparse
/// text format.
void dump_sdp(const ExperimentConfig& config, const std::string& scheme, std::ostream& out);

}  // namespace layercast
