// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "layercast/model.hpp"

#include <vector>

namespace layercast {

enum class SchemeKind { LayerBased, QualityBased };

const char* to_string(SchemeKind scheme);

/// Contiguous range of SVC layers [first, last], 1-based.
struct LayerRange {
  int first = 1;
  int last = 1;

  int size() const { return last - first + 1; }
  bool contains(int layer) const { return layer >= first && layer <= last; }
  friend bool operator==(const LayerRange&, const LayerRange&) = default;
};

struct SuperLayerPlan {
  std::vector<LayerRange> partitions;    // ascending, covering 1..max requested layer
  std::vector<int> per_group_counts;     // r_QB,g in the caller's group order
  std::vector<double> super_rates;
  std::vector<double> super_thresholds;
  /// sorted_groups[k] is the original index of the k-th largest requirement
  /// (stable for ties).
  std::vector<int> sorted_groups;

  int super_layer_count() const { return static_cast<int>(partitions.size()); }
  /// 1-based super-layer holding the given SVC layer.
  int super_layer_of(int layer) const;
};

SuperLayerPlan build_plan(const LayerSelection& selection, const VideoProfile& profile);

/// Users requesting the given 1-based super-layer.
std::vector<UserIndex> requesters(const SuperLayerPlan& plan, int super_layer,
                                  const GroupConfig& groups);

/// What the power-minimization problem sees of either scheme: one threshold
/// per transmission unit (a layer or a super-layer) and, per group, how many
/// leading units its users decode.
struct UnitStructure {
  SchemeKind scheme = SchemeKind::LayerBased;
  std::vector<double> thresholds;
  std::vector<int> per_group_counts;

  int unit_count() const { return static_cast<int>(thresholds.size()); }
};

UnitStructure unit_structure(const LayerSelection& selection, const VideoProfile& profile,
                             SchemeKind scheme);

/// Users decoding the given 1-based unit.
std::vector<UserIndex> unit_requesters(const UnitStructure& units, int unit,
                                       const GroupConfig& groups);

}  // namespace layercast
