// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace layercast {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Layered video description: per-layer rates (bits/s/Hz) and the utility
/// f(l) of a user that decodes layers 1..l.
struct VideoProfile {
  std::vector<double> rates;
  std::vector<double> utilities;

  int layer_count() const { return static_cast<int>(rates.size()); }
  double utility(int quality) const { return utilities.at(quality - 1); }

  /// Throws std::invalid_argument unless L >= 1, all rates are positive and
  /// the utilities are nonnegative and nondecreasing.
  void validate() const;

  /// Five-layer SVC encoding of the Kendo sequence (PSNR utilities).
  static VideoProfile kendo();
  /// L layers of identical rate with zero utilities; the power-minimization
  /// experiments only need the rates.
  static VideoProfile uniform(int layers, double rate);
  /// The first `layers` layers of this profile.
  VideoProfile truncated(int layers) const;
};

/// Users partitioned into groups; every user of a group sits at the group's
/// relative distance.
struct GroupConfig {
  std::vector<int> users;
  std::vector<double> distances;
  double path_loss_exponent = 2.0;

  int group_count() const { return static_cast<int>(users.size()); }
  int user_count() const;
  void validate() const;
};

struct UserIndex {
  int group = 0;
  int member = 0;

  friend bool operator==(const UserIndex&, const UserIndex&) = default;
};

/// One global channel state: h[g][k] is the length-N channel of user k in
/// group g.
struct ChannelState {
  std::vector<std::vector<CVector>> h;

  int antennas() const;
  const CVector& at(UserIndex u) const { return h.at(u.group).at(u.member); }
  void validate(const GroupConfig& groups, int antennas) const;
};

struct ChannelEnsemble {
  std::vector<ChannelState> states;
  std::uint64_t seed = 0;

  void validate(const GroupConfig& groups, int antennas) const;
};

struct ProblemInstance {
  VideoProfile profile;
  GroupConfig groups;
  int antennas = 1;
  std::vector<std::vector<double>> noise;  // sigma_u^2, indexed like channel.h
  ChannelState channel;

  double noise_at(UserIndex u) const { return noise.at(u.group).at(u.member); }
  void validate() const;

  /// Instance with the same noise power for every user.
  static ProblemInstance make(VideoProfile profile, GroupConfig groups,
                              ChannelState channel, double noise_power = 1.0);
};

/// Quality level r_g in {1..L} requested for each group.
struct LayerSelection {
  std::vector<int> r;

  int group_count() const { return static_cast<int>(r.size()); }
  int max_quality() const;
  void validate(const VideoProfile& profile, const GroupConfig& groups) const;

  friend bool operator==(const LayerSelection&, const LayerSelection&) = default;
  friend auto operator<=>(const LayerSelection&, const LayerSelection&) = default;
};

/// Every user of every group, group-major order.
std::vector<UserIndex> all_users(const GroupConfig& groups);

/// Draws `count` states with h_u ~ CN(0, d_g^-eta I_N). Deterministic in the
/// seed.
ChannelEnsemble sample_channels(const GroupConfig& groups, int antennas, int count,
                                std::uint64_t seed);

/// 2^rate - 1.
double sinr_threshold(double rate);

/// sum_g U_g f(r_g).
double total_utility(const LayerSelection& selection, const GroupConfig& groups,
                     const VideoProfile& profile);

/// Element-wise r >= other.
bool dominates(const LayerSelection& r, const LayerSelection& other);

}  // namespace layercast
