// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "layercast/beamform.hpp"
#include "layercast/model.hpp"
#include "layercast/sdp.hpp"

#include <cstdint>
#include <vector>

namespace layercast {

struct BaselineResult {
  std::vector<CVector> vectors;  // one per group (MGM) or per unit (MRT)
  double power = 0.0;            // +inf when infeasible
  bool feasible = false;
  double sdr_bound = 0.0;        // MGM only, at the accuracy the solve reached
  int randomizations = 0;        // MGM only
};

/// Multi-group multicast relaxation: one block per group carrying all of
/// the group's layers as a single message; every other group interferes.
sdp::Problem build_mgm_sdr(const ProblemInstance& instance, const LayerSelection& selection);

/// Minimal per-group powers for fixed unit-norm directions, found by the
/// fixed-point interference iteration. Returns false when no finite powers
/// meet every SINR target.
bool mgm_powers(const ProblemInstance& instance, const LayerSelection& selection,
                const std::vector<CVector>& directions, std::vector<double>& powers);

/// Relaxation followed by Gaussian randomization (plus the top eigenvectors
/// as a deterministic candidate). Throws InfeasibleError when the relaxation
/// is infeasible.
BaselineResult mgm_power_min(const ProblemInstance& instance, const LayerSelection& selection,
                             int randomizations = 300, std::uint64_t seed = 0,
                             const sdp::Options& options = {});

/// Per-unit maximum-ratio directions with exact back-substituted powers.
BaselineResult mrt_power_min(const ProblemInstance& instance, const LayerSelection& selection,
                             SchemeKind scheme);

}  // namespace layercast
