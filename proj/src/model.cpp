// SPDX-License-Identifier: Apache-2.0
#include "layercast/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace layercast {

void VideoProfile::validate() const {
  if (rates.empty()) throw std::invalid_argument("video profile needs at least one layer");
  if (utilities.size() != rates.size())
    throw std::invalid_argument("video profile needs one utility per layer");
  for (double r : rates)
    if (!(r > 0.0) || !std::isfinite(r))
      throw std::invalid_argument("layer rates must be positive");
  for (std::size_t l = 0; l < utilities.size(); ++l) {
    if (!(utilities[l] >= 0.0)) throw std::invalid_argument("utilities must be nonnegative");
    if (l > 0 && utilities[l] < utilities[l - 1])
      throw std::invalid_argument("utilities must be nondecreasing in the quality level");
  }
}

VideoProfile VideoProfile::kendo() {
  return {{0.7447, 0.9358, 2.9765, 3.3320, 7.1040},
          {28.1496, 30.6066, 37.2694, 37.6534, 39.2136}};
}

VideoProfile VideoProfile::uniform(int layers, double rate) {
  if (layers < 1) throw std::invalid_argument("layer count must be positive");
  return {std::vector<double>(layers, rate), std::vector<double>(layers, 0.0)};
}

VideoProfile VideoProfile::truncated(int layers) const {
  if (layers < 1 || layers > layer_count())
    throw std::invalid_argument("cannot truncate profile to " + std::to_string(layers) + " layers");
  return {{rates.begin(), rates.begin() + layers}, {utilities.begin(), utilities.begin() + layers}};
}

int GroupConfig::user_count() const {
  int total = 0;
  for (int u : users) total += u;
  return total;
}

void GroupConfig::validate() const {
  if (users.empty()) throw std::invalid_argument("at least one group is required");
  if (distances.size() != users.size())
    throw std::invalid_argument("one distance per group is required");
  for (int u : users)
    if (u < 1) throw std::invalid_argument("every group needs at least one user");
  for (double d : distances)
    if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("distances must be positive");
  if (!(path_loss_exponent > 0.0)) throw std::invalid_argument("path loss exponent must be positive");
}

int ChannelState::antennas() const {
  if (h.empty() || h.front().empty()) return 0;
  return static_cast<int>(h.front().front().size());
}

void ChannelState::validate(const GroupConfig& groups, int antennas) const {
  if (static_cast<int>(h.size()) != groups.group_count())
    throw std::invalid_argument("channel state group count does not match");
  for (int g = 0; g < groups.group_count(); ++g) {
    if (static_cast<int>(h[g].size()) != groups.users[g])
      throw std::invalid_argument("channel state user count does not match group " +
                                  std::to_string(g + 1));
    for (const auto& v : h[g]) {
      if (v.size() != antennas) throw std::invalid_argument("channel vector has wrong length");
      if (v.squaredNorm() == 0.0) throw std::invalid_argument("channel vector is identically zero");
    }
  }
}

void ChannelEnsemble::validate(const GroupConfig& groups, int antennas) const {
  if (states.empty()) throw std::invalid_argument("channel ensemble is empty");
  for (const auto& s : states) s.validate(groups, antennas);
}

void ProblemInstance::validate() const {
  profile.validate();
  groups.validate();
  if (antennas < 1) throw std::invalid_argument("antenna count must be positive");
  channel.validate(groups, antennas);
  if (static_cast<int>(noise.size()) != groups.group_count())
    throw std::invalid_argument("noise powers do not match the group structure");
  for (int g = 0; g < groups.group_count(); ++g) {
    if (static_cast<int>(noise[g].size()) != groups.users[g])
      throw std::invalid_argument("noise powers do not match the group structure");
    for (double s : noise[g])
      if (!(s > 0.0)) throw std::invalid_argument("noise powers must be positive");
  }
}

ProblemInstance ProblemInstance::make(VideoProfile profile, GroupConfig groups,
                                      ChannelState channel, double noise_power) {
  ProblemInstance inst;
  inst.antennas = channel.antennas();
  inst.noise.resize(groups.group_count());
  for (int g = 0; g < groups.group_count(); ++g) inst.noise[g].assign(groups.users[g], noise_power);
  inst.profile = std::move(profile);
  inst.groups = std::move(groups);
  inst.channel = std::move(channel);
  inst.validate();
  return inst;
}

int LayerSelection::max_quality() const {
  return r.empty() ? 0 : *std::max_element(r.begin(), r.end());
}

void LayerSelection::validate(const VideoProfile& profile, const GroupConfig& groups) const {
  if (group_count() != groups.group_count())
    throw std::invalid_argument("layer selection needs one quality per group");
  for (int q : r)
    if (q < 1 || q > profile.layer_count())
      throw std::invalid_argument("quality level " + std::to_string(q) + " outside 1.." +
                                  std::to_string(profile.layer_count()));
}

std::vector<UserIndex> all_users(const GroupConfig& groups) {
  std::vector<UserIndex> out;
  out.reserve(groups.user_count());
  for (int g = 0; g < groups.group_count(); ++g)
    for (int k = 0; k < groups.users[g]; ++k) out.push_back({g, k});
  return out;
}

ChannelEnsemble sample_channels(const GroupConfig& groups, int antennas, int count,
                                std::uint64_t seed) {
  groups.validate();
  if (antennas < 1) throw std::invalid_argument("antenna count must be positive");
  if (count < 1) throw std::invalid_argument("ensemble size must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ChannelEnsemble ens;
  ens.seed = seed;
  ens.states.resize(count);
  for (auto& state : ens.states) {
    state.h.resize(groups.group_count());
    for (int g = 0; g < groups.group_count(); ++g) {
      // Real and imaginary parts each carry half of the per-entry variance.
      const double sd =
          std::sqrt(0.5 / std::pow(groups.distances[g], groups.path_loss_exponent));
      state.h[g].resize(groups.users[g]);
      for (auto& v : state.h[g]) {
        v.resize(antennas);
        for (int n = 0; n < antennas; ++n) {
          const double re = sd * normal(rng);
          const double im = sd * normal(rng);
          v[n] = {re, im};
        }
      }
    }
  }
  return ens;
}

double sinr_threshold(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  return std::expm1(rate * std::numbers::ln2);
}

double total_utility(const LayerSelection& selection, const GroupConfig& groups,
                     const VideoProfile& profile) {
  selection.validate(profile, groups);
  double total = 0.0;
  for (int g = 0; g < groups.group_count(); ++g)
    total += groups.users[g] * profile.utility(selection.r[g]);
  return total;
}

bool dominates(const LayerSelection& r, const LayerSelection& other) {
  if (r.r.size() != other.r.size()) return false;
  for (std::size_t g = 0; g < r.r.size(); ++g)
    if (r.r[g] < other.r[g]) return false;
  return true;
}

}  // namespace layercast
