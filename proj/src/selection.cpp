// SPDX-License-Identifier: Apache-2.0
#include "layercast/selection.hpp"

#include "layercast/baselines.hpp"
#include "layercast/errors.hpp"
#include "layercast/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace layercast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZeroSaving = 1e-9;
constexpr double kEnumerationGuard = 1e5;

double max_of(const std::vector<double>& v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);  // +inf propagates
  return m;
}

bool all_at_floor(const LayerSelection& r) {
  return std::all_of(r.r.begin(), r.r.end(), [](int q) { return q <= 1; });
}

// Greedy decrement rule: smallest utility loss per unit of power saved, ties
// to the smaller group. Candidates that save no power rank last; if nothing
// saves power, drop the group with the largest utility loss.
template <class Value>
void decrement(LayerSelection& r, const BudgetedProblem& problem, Value&& value,
               SelectionResult& out) {
  const double here = value(r);
  const int G = r.group_count();
  int best = -1, fallback = -1;
  double best_ratio = kInf, fallback_loss = -kInf;
  for (int g = 0; g < G; ++g) {
    if (r.r[g] < 2) continue;
    LayerSelection lower = r;
    --lower.r[g];
    const double loss = problem.groups.users[g] *
                        (problem.profile.utility(r.r[g]) - problem.profile.utility(r.r[g] - 1));
    const double there = value(lower);
    double saving;
    if (std::isinf(here) && std::isinf(there))
      saving = 0.0;
    else
      saving = here - there;
    const double ratio = saving <= kZeroSaving ? kInf : loss / saving;
    if (ratio < best_ratio) {
      best_ratio = ratio;
      best = g;
    }
    if (loss > fallback_loss) {
      fallback_loss = loss;
      fallback = g;
    }
  }
  if (best < 0) {
    best = fallback;
    ++out.zero_saving_steps;
  }
  --r.r[best];
}

// Per-selection caches of relaxation and power_min results across the
// ensemble, so that greedy steps and the final recomputation reuse solves.
class Evaluator {
 public:
  Evaluator(const BudgetedProblem& problem, const SelectionOptions& options)
      : problem_(problem), options_(options) {}

  double relaxation(const LayerSelection& r) {
    auto it = relaxed_.find(r);
    if (it != relaxed_.end()) return it->second.worst;
    const int S = problem_.state_count();
    Relaxed entry;
    entry.sets.resize(S);
    entry.values.assign(S, kInf);
    parallel_for(S, options_.threads, [&](int s) {
      const auto inst = problem_.instance(s);
      try {
        auto set = solve_sdr(build_sdr(inst, r, SchemeKind::QualityBased), SchemeKind::QualityBased,
                             options_.power.sdp);
        entry.values[s] = set.objective();
        entry.sets[s] = std::move(set);
      } catch (const Error&) {
      }
    });
    entry.worst = max_of(entry.values);
    ++evaluations_;
    return relaxed_.emplace(r, std::move(entry)).first->second.worst;
  }

  double achieved(const LayerSelection& r) {
    auto it = achieved_.find(r);
    if (it != achieved_.end()) return it->second.worst;
    const int S = problem_.state_count();
    const auto rel = relaxed_.find(r);
    Achieved entry;
    entry.results.resize(S);
    entry.values.assign(S, kInf);
    parallel_for(S, options_.threads, [&](int s) {
      const PsdSolutionSet* sdr = nullptr;
      if (rel != relaxed_.end()) {
        if (!rel->second.sets[s]) return;
        sdr = &*rel->second.sets[s];
      }
      try {
        auto res = power_min(problem_.instance(s), r, SchemeKind::QualityBased, options_.power, sdr);
        entry.values[s] = res.power;
        entry.results[s] = std::move(res);
      } catch (const Error&) {
      }
    });
    entry.worst = max_of(entry.values);
    if (rel == relaxed_.end()) ++evaluations_;
    return achieved_.emplace(r, std::move(entry)).first->second.worst;
  }

  void finish(const LayerSelection& r, SelectionResult& out) {
    achieved(r);
    const auto& entry = achieved_.at(r);
    out.selection = r;
    out.utility = total_utility(r, problem_.groups, problem_.profile);
    out.state_powers = entry.values;
    out.per_state.clear();
    for (const auto& res : entry.results) out.per_state.push_back(*res);
    out.evaluations = evaluations_;
    out.feasible = true;
  }

 private:
  struct Relaxed {
    std::vector<std::optional<PsdSolutionSet>> sets;
    std::vector<double> values;
    double worst = kInf;
  };
  struct Achieved {
    std::vector<std::optional<PowerResult>> results;
    std::vector<double> values;
    double worst = kInf;
  };

  const BudgetedProblem& problem_;
  const SelectionOptions& options_;
  std::map<LayerSelection, Relaxed> relaxed_;
  std::map<LayerSelection, Achieved> achieved_;
  int evaluations_ = 0;
};

}  // namespace

ProblemInstance BudgetedProblem::instance(int state) const {
  ProblemInstance inst;
  inst.profile = profile;
  inst.groups = groups;
  inst.antennas = antennas;
  inst.noise = noise;
  inst.channel = ensemble.states.at(state);
  return inst;
}

void BudgetedProblem::validate() const {
  profile.validate();
  groups.validate();
  if (antennas < 1) throw std::invalid_argument("antenna count must be positive");
  if (!(budget > 0.0) || !std::isfinite(budget))
    throw std::invalid_argument("power budget must be positive and finite");
  if (ensemble.states.empty()) throw std::invalid_argument("channel ensemble is empty");
  ensemble.validate(groups, antennas);
  if (static_cast<int>(noise.size()) != groups.group_count())
    throw std::invalid_argument("noise powers do not match the groups");
  for (int g = 0; g < groups.group_count(); ++g) {
    if (static_cast<int>(noise[g].size()) != groups.users[g])
      throw std::invalid_argument("noise powers do not match the groups");
    for (double s : noise[g])
      if (!(s > 0.0)) throw std::invalid_argument("noise powers must be positive");
  }
}

BudgetedProblem BudgetedProblem::make(VideoProfile profile, GroupConfig groups,
                                      ChannelEnsemble ensemble, double budget, double noise_power) {
  BudgetedProblem p;
  p.noise.resize(groups.group_count());
  for (int g = 0; g < groups.group_count(); ++g) p.noise[g].assign(groups.users[g], noise_power);
  p.profile = std::move(profile);
  p.groups = std::move(groups);
  p.antennas = ensemble.states.empty() ? 1 : ensemble.states.front().antennas();
  p.ensemble = std::move(ensemble);
  p.budget = budget;
  return p;
}

std::string to_string(SelectionMethod method) {
  return method == SelectionMethod::Exhaustive ? "exhaustive" : "greedy";
}

double worst_case_sdr_power(const BudgetedProblem& problem, const LayerSelection& selection,
                            const SelectionOptions& options) {
  problem.validate();
  selection.validate(problem.profile, problem.groups);
  return Evaluator(problem, options).relaxation(selection);
}

double worst_case_penalty_power(const BudgetedProblem& problem, const LayerSelection& selection,
                                const SelectionOptions& options) {
  problem.validate();
  selection.validate(problem.profile, problem.groups);
  return Evaluator(problem, options).achieved(selection);
}

SelectionResult exhaustive_select(const BudgetedProblem& problem, const SelectionOptions& options) {
  problem.validate();
  const int G = problem.groups.group_count();
  const int L = problem.profile.layer_count();
  if (std::pow(static_cast<double>(L), G) > kEnumerationGuard)
    throw std::invalid_argument("too many selections to enumerate");

  std::vector<LayerSelection> candidates;
  LayerSelection r{std::vector<int>(G, 1)};
  while (true) {
    candidates.push_back(r);
    int g = G - 1;
    while (g >= 0 && r.r[g] == L) r.r[g--] = 1;
    if (g < 0) break;
    ++r.r[g];
  }
  std::vector<double> utility;
  for (const auto& c : candidates) utility.push_back(total_utility(c, problem.groups, problem.profile));
  std::vector<int> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (utility[a] != utility[b]) return utility[a] > utility[b];
    return candidates[a] > candidates[b];
  });

  Evaluator ev(problem, options);
  SelectionResult out;
  out.method = SelectionMethod::Exhaustive;
  for (int i : order) {
    const auto& c = candidates[i];
    const double p = is_special_case(problem.groups, c, SchemeKind::QualityBased)
                         ? ev.relaxation(c)
                         : ev.achieved(c);
    if (p <= problem.budget) {
      ev.finish(c, out);
      out.worst_case_power = p;
      return out;
    }
  }
  throw InfeasibleError("no layer selection fits the power budget");
}

SelectionResult greedy_select(const BudgetedProblem& problem, const SelectionOptions& options) {
  problem.validate();
  Evaluator ev(problem, options);
  SelectionResult out;
  out.method = SelectionMethod::Greedy;
  LayerSelection r{std::vector<int>(problem.groups.group_count(), problem.profile.layer_count())};
  auto relaxed = [&](const LayerSelection& x) { return ev.relaxation(x); };

  while (ev.relaxation(r) > problem.budget) {
    if (all_at_floor(r)) throw InfeasibleError("no layer selection fits the power budget");
    decrement(r, problem, relaxed, out);
    ++out.relaxation_steps;
  }
  double p;
  while ((p = ev.achieved(r)) > problem.budget) {
    if (all_at_floor(r)) throw InfeasibleError("no layer selection fits the power budget");
    decrement(r, problem, relaxed, out);
    ++out.refinement_steps;
  }
  ev.finish(r, out);
  out.worst_case_power = p;
  return out;
}

SelectionResult greedy_select(const BudgetedProblem& problem, const PowerOracle& oracle,
                              int threads) {
  problem.validate();
  std::map<LayerSelection, std::vector<double>> cache;
  SelectionResult out;
  out.method = SelectionMethod::Greedy;
  auto powers = [&](const LayerSelection& x) -> const std::vector<double>& {
    auto it = cache.find(x);
    if (it != cache.end()) return it->second;
    std::vector<double> v(problem.state_count(), kInf);
    parallel_for(problem.state_count(), threads, [&](int s) {
      try {
        v[s] = oracle(problem.instance(s), x);
      } catch (const Error&) {
      }
    });
    ++out.evaluations;
    return cache.emplace(x, std::move(v)).first->second;
  };
  auto worst = [&](const LayerSelection& x) { return max_of(powers(x)); };

  LayerSelection r{std::vector<int>(problem.groups.group_count(), problem.profile.layer_count())};
  while (worst(r) > problem.budget) {
    if (all_at_floor(r)) throw InfeasibleError("no layer selection fits the power budget");
    decrement(r, problem, worst, out);
    ++out.relaxation_steps;
  }
  out.selection = r;
  out.utility = total_utility(r, problem.groups, problem.profile);
  out.state_powers = powers(r);
  out.worst_case_power = max_of(out.state_powers);
  out.feasible = true;
  return out;
}

PowerOracle mgm_oracle(int randomizations, std::uint64_t seed) {
  return [=](const ProblemInstance& inst, const LayerSelection& r) {
    return mgm_power_min(inst, r, randomizations, seed).power;
  };
}

PowerOracle mrt_oracle() {
  return [](const ProblemInstance& inst, const LayerSelection& r) {
    return mrt_power_min(inst, r, SchemeKind::LayerBased).power;
  };
}

std::string selection_label(const LayerSelection& selection) {
  std::string s;
  for (std::size_t i = 0; i < selection.r.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(selection.r[i]);
  }
  return s;
}

void write_selection_csv(std::ostream& out, const SelectionResult& result) {
  const auto old = out.precision(17);
  out << "method,selection,utility,worst_case_power,state,power\n";
  for (std::size_t s = 0; s < result.state_powers.size(); ++s)
    out << to_string(result.method) << ',' << selection_label(result.selection) << ','
        << result.utility << ',' << result.worst_case_power << ',' << s << ','
        << result.state_powers[s] << '\n';
  out.precision(old);
}

}  // namespace layercast
