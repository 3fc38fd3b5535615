// SPDX-License-Identifier: Apache-2.0
#include "layercast/superlayer.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace layercast {

const char* to_string(SchemeKind scheme) {
  return scheme == SchemeKind::LayerBased ? "lb" : "qb";
}

int SuperLayerPlan::super_layer_of(int layer) const {
  for (int s = 0; s < super_layer_count(); ++s)
    if (partitions[s].contains(layer)) return s + 1;
  throw std::out_of_range("layer not covered by the plan");
}

SuperLayerPlan build_plan(const LayerSelection& selection, const VideoProfile& profile) {
  if (selection.r.empty()) throw std::invalid_argument("layer selection is empty");
  for (int q : selection.r)
    if (q < 1 || q > profile.layer_count())
      throw std::invalid_argument("quality level outside the profile");

  SuperLayerPlan plan;
  const int G = selection.group_count();
  plan.sorted_groups.resize(G);
  std::iota(plan.sorted_groups.begin(), plan.sorted_groups.end(), 0);
  std::stable_sort(plan.sorted_groups.begin(), plan.sorted_groups.end(),
                   [&](int a, int b) { return selection.r[a] > selection.r[b]; });

  std::vector<int> sorted(G + 1, 0);
  for (int k = 0; k < G; ++k) sorted[k] = selection.r[plan.sorted_groups[k]];

  // Difference sets come out top-down; super-layers are numbered bottom-up.
  for (int k = G - 1; k >= 0; --k)
    if (sorted[k] > sorted[k + 1]) plan.partitions.push_back({sorted[k + 1] + 1, sorted[k]});

  plan.per_group_counts.resize(G);
  for (int g = 0; g < G; ++g) {
    int count = 0;
    for (const auto& p : plan.partitions)
      if (p.last <= selection.r[g]) ++count;
    plan.per_group_counts[g] = count;
  }

  for (const auto& p : plan.partitions) {
    double rate = 0.0;
    for (int l = p.first; l <= p.last; ++l) rate += profile.rates[l - 1];
    plan.super_rates.push_back(rate);
    plan.super_thresholds.push_back(sinr_threshold(rate));
  }
  return plan;
}

namespace {

std::vector<UserIndex> users_with_count_at_least(const std::vector<int>& counts, int unit,
                                                 const GroupConfig& groups) {
  std::vector<UserIndex> out;
  for (int g = 0; g < groups.group_count(); ++g)
    if (counts.at(g) >= unit)
      for (int k = 0; k < groups.users[g]; ++k) out.push_back({g, k});
  return out;
}

}  // namespace

std::vector<UserIndex> requesters(const SuperLayerPlan& plan, int super_layer,
                                  const GroupConfig& groups) {
  if (super_layer < 1 || super_layer > plan.super_layer_count())
    throw std::out_of_range("super-layer index out of range");
  return users_with_count_at_least(plan.per_group_counts, super_layer, groups);
}

UnitStructure unit_structure(const LayerSelection& selection, const VideoProfile& profile,
                             SchemeKind scheme) {
  UnitStructure units;
  units.scheme = scheme;
  if (scheme == SchemeKind::QualityBased) {
    auto plan = build_plan(selection, profile);
    units.thresholds = std::move(plan.super_thresholds);
    units.per_group_counts = std::move(plan.per_group_counts);
    return units;
  }
  for (int q : selection.r)
    if (q < 1 || q > profile.layer_count())
      throw std::invalid_argument("quality level outside the profile");
  for (int l = 0; l < selection.max_quality(); ++l)
    units.thresholds.push_back(sinr_threshold(profile.rates[l]));
  units.per_group_counts = selection.r;
  return units;
}

std::vector<UserIndex> unit_requesters(const UnitStructure& units, int unit,
                                       const GroupConfig& groups) {
  if (unit < 1 || unit > units.unit_count()) throw std::out_of_range("unit index out of range");
  return users_with_count_at_least(units.per_group_counts, unit, groups);
}

}  // namespace layercast
