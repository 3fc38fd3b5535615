// SPDX-License-Identifier: Apache-2.0
// Shared fixtures and reference formulas for the test binaries.
#pragma once

#include "layercast/model.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace layercast::testing {

inline CVector random_channel(std::mt19937_64& rng, int n, double gain = 1.0) {
  std::normal_distribution<double> nd(0.0, std::sqrt(gain / 2.0));
  CVector h(n);
  for (int i = 0; i < n; ++i) h[i] = {nd(rng), nd(rng)};
  return h;
}

inline ProblemInstance single_user(const CVector& h, std::vector<double> rates,
                                   double noise = 1.0) {
  VideoProfile profile{rates, std::vector<double>(rates.size(), 0.0)};
  ChannelState state;
  state.h = {{h}};
  return ProblemInstance::make(profile, GroupConfig{{1}, {1.0}, 2.0}, state, noise);
}

// Layered power for one user along its own channel: the top layer sees only
// noise, each lower layer also sees everything above it.
inline std::vector<double> back_substitution(double gain, const std::vector<double>& rates,
                                             double noise = 1.0) {
  std::vector<double> p(rates.size());
  double above = 0.0;
  for (int l = static_cast<int>(rates.size()) - 1; l >= 0; --l) {
    const double gamma = std::pow(2.0, rates[l]) - 1.0;
    p[l] = gamma * (gain * above + noise) / gain;
    above += p[l];
  }
  return p;
}

inline double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline ProblemInstance random_instance(std::mt19937_64& rng, const GroupConfig& groups,
                                       const VideoProfile& profile, int antennas) {
  const auto ens = sample_channels(groups, antennas, 1, rng());
  return ProblemInstance::make(profile, groups, ens.states[0]);
}

}  // namespace layercast::testing
