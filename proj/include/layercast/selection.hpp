// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "layercast/beamform.hpp"
#include "layercast/model.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace layercast {

/// Layer selection under a power budget that must hold in every state of a
/// channel ensemble.
struct BudgetedProblem {
  VideoProfile profile;
  GroupConfig groups;
  int antennas = 1;
  std::vector<std::vector<double>> noise;  // indexed like ChannelState::h
  ChannelEnsemble ensemble;
  double budget = 0.0;

  int state_count() const { return static_cast<int>(ensemble.states.size()); }
  ProblemInstance instance(int state) const;
  void validate() const;

  static BudgetedProblem make(VideoProfile profile, GroupConfig groups, ChannelEnsemble ensemble,
                              double budget, double noise_power = 1.0);
};

enum class SelectionMethod { Exhaustive, Greedy };
std::string to_string(SelectionMethod method);

struct SelectionOptions {
  PowerOptions power;
  int threads = 1;  // workers for per-state solves; 0 = hardware concurrency
};

struct SelectionResult {
  LayerSelection selection;
  double utility = 0.0;
  double worst_case_power = 0.0;
  std::vector<double> state_powers;
  std::vector<PowerResult> per_state;  // empty for baseline oracles
  SelectionMethod method = SelectionMethod::Greedy;
  bool feasible = false;
  int evaluations = 0;          // selections whose worst-case power was computed
  int relaxation_steps = 0;     // greedy decrements driven by relaxation values
  int refinement_steps = 0;     // greedy decrements driven by achieved powers
  int zero_saving_steps = 0;    // decrements taken when no candidate saved power
};

/// Largest quality-based relaxation value over the ensemble; +inf if any
/// state is infeasible.
double worst_case_sdr_power(const BudgetedProblem& problem, const LayerSelection& selection,
                            const SelectionOptions& options = {});

/// Largest power achieved by power_min over the ensemble; +inf if any state
/// fails.
double worst_case_penalty_power(const BudgetedProblem& problem, const LayerSelection& selection,
                                const SelectionOptions& options = {});

/// Candidates in decreasing utility (ties: lexicographically decreasing);
/// the first whose worst-case power fits the budget wins. Throws
/// InfeasibleError if none does.
SelectionResult exhaustive_select(const BudgetedProblem& problem,
                                  const SelectionOptions& options = {});

/// Two-phase greedy descent from full quality. Throws InfeasibleError when
/// every group is at quality 1 and the budget still fails.
SelectionResult greedy_select(const BudgetedProblem& problem, const SelectionOptions& options = {});

/// Power of one selection in one state; +inf when infeasible.
using PowerOracle = std::function<double(const ProblemInstance&, const LayerSelection&)>;

/// Single-phase greedy descent driven by an arbitrary power oracle.
SelectionResult greedy_select(const BudgetedProblem& problem, const PowerOracle& oracle,
                              int threads = 1);

PowerOracle mgm_oracle(int randomizations, std::uint64_t seed);
PowerOracle mrt_oracle();

/// "3-2-1" style label.
std::string selection_label(const LayerSelection& selection);

/// Header `method,selection,utility,worst_case_power,state,power`, one row
/// per ensemble state.
void write_selection_csv(std::ostream& out, const SelectionResult& result);

}  // namespace layercast
