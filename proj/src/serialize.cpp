// SPDX-License-Identifier: Apache-2.0
#include "layercast/serialize.hpp"

#include <stdexcept>

namespace layercast {

Json complex_vector_to_json(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v[i].real(), v[i].imag()});
  return out;
}

CVector complex_vector_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("complex vector must be an array of [re, im]");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Json& z = j[i];
    if (!z.is_array() || z.size() != 2)
      throw std::invalid_argument("complex entry must be a [re, im] pair");
    v[static_cast<Eigen::Index>(i)] = {z[0].get<double>(), z[1].get<double>()};
  }
  return v;
}

void to_json(Json& j, const VideoProfile& p) {
  j = Json{{"rates", p.rates}, {"utilities", p.utilities}};
}

void from_json(const Json& j, VideoProfile& p) {
  j.at("rates").get_to(p.rates);
  if (j.contains("utilities"))
    j.at("utilities").get_to(p.utilities);
  else
    p.utilities.assign(p.rates.size(), 0.0);
}

void to_json(Json& j, const GroupConfig& g) {
  j = Json{{"users", g.users},
           {"distances", g.distances},
           {"path_loss_exponent", g.path_loss_exponent}};
}

void from_json(const Json& j, GroupConfig& g) {
  j.at("users").get_to(g.users);
  j.at("distances").get_to(g.distances);
  g.path_loss_exponent = j.value("path_loss_exponent", 2.0);
}

void to_json(Json& j, const ChannelState& s) {
  j = Json::array();
  for (const auto& group : s.h) {
    Json users = Json::array();
    for (const auto& h : group) users.push_back(complex_vector_to_json(h));
    j.push_back(std::move(users));
  }
}

void from_json(const Json& j, ChannelState& s) {
  s.h.clear();
  for (const auto& group : j) {
    auto& dst = s.h.emplace_back();
    for (const auto& h : group) dst.push_back(complex_vector_from_json(h));
  }
}

void to_json(Json& j, const ChannelEnsemble& e) {
  j = Json{{"seed", e.seed}, {"states", e.states}};
}

void from_json(const Json& j, ChannelEnsemble& e) {
  e.seed = j.value("seed", std::uint64_t{0});
  j.at("states").get_to(e.states);
}

void to_json(Json& j, const ProblemInstance& inst) {
  j = Json{{"profile", inst.profile},
           {"groups", inst.groups},
           {"antennas", inst.antennas},
           {"noise", inst.noise},
           {"channel", inst.channel}};
}

void from_json(const Json& j, ProblemInstance& inst) {
  j.at("profile").get_to(inst.profile);
  j.at("groups").get_to(inst.groups);
  j.at("channel").get_to(inst.channel);
  inst.antennas = j.contains("antennas") ? j.at("antennas").get<int>() : inst.channel.antennas();
  if (j.contains("noise")) {
    j.at("noise").get_to(inst.noise);
  } else {
    inst.noise.clear();
    for (int n : inst.groups.users) inst.noise.emplace_back(n, 1.0);
  }
  inst.validate();
}

void to_json(Json& j, const LayerSelection& s) { j = s.r; }

void from_json(const Json& j, LayerSelection& s) { j.get_to(s.r); }

void to_json(Json& j, const LayerRange& r) { j = Json::array({r.first, r.last}); }

void from_json(const Json& j, LayerRange& r) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("layer range must be [first, last]");
  r.first = j[0].get<int>();
  r.last = j[1].get<int>();
}

void to_json(Json& j, const SuperLayerPlan& plan) {
  j = Json{{"partitions", plan.partitions},
           {"per_group_counts", plan.per_group_counts},
           {"super_rates", plan.super_rates},
           {"super_thresholds", plan.super_thresholds},
           {"sorted_groups", plan.sorted_groups}};
}

void from_json(const Json& j, SuperLayerPlan& plan) {
  j.at("partitions").get_to(plan.partitions);
  j.at("per_group_counts").get_to(plan.per_group_counts);
  j.at("super_rates").get_to(plan.super_rates);
  j.at("super_thresholds").get_to(plan.super_thresholds);
  j.at("sorted_groups").get_to(plan.sorted_groups);
}

SchemeKind scheme_from_string(const std::string& name) {
  if (name == "lb") return SchemeKind::LayerBased;
  if (name == "qb") return SchemeKind::QualityBased;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

PowerMethod power_method_from_string(const std::string& name) {
  if (name == to_string(PowerMethod::RankReduction)) return PowerMethod::RankReduction;
  if (name == to_string(PowerMethod::Penalty)) return PowerMethod::Penalty;
  throw std::invalid_argument("unknown power method '" + name + "'");
}

void to_json(Json& j, const BeamformerSet& b) {
  Json vectors = Json::array();
  for (const auto& v : b.vectors) vectors.push_back(complex_vector_to_json(v));
  j = Json{{"scheme", to_string(b.scheme)}, {"vectors", std::move(vectors)}};
}

void from_json(const Json& j, BeamformerSet& b) {
  b.scheme = scheme_from_string(j.at("scheme").get<std::string>());
  b.vectors.clear();
  for (const auto& v : j.at("vectors")) b.vectors.push_back(complex_vector_from_json(v));
}

void to_json(Json& j, const PowerResult& r) {
  j = Json{{"beamformers", r.beamformers},
           {"power", r.power},
           {"sdr_bound", r.sdr_bound},
           {"method", to_string(r.method)},
           {"rank_one_residual", r.rank_one_residual},
           {"scale_factor", r.scale_factor}};
}

void from_json(const Json& j, PowerResult& r) {
  j.at("beamformers").get_to(r.beamformers);
  r.power = j.at("power").get<double>();
  r.sdr_bound = j.at("sdr_bound").get<double>();
  r.method = power_method_from_string(j.at("method").get<std::string>());
  r.rank_one_residual = j.value("rank_one_residual", 0.0);
  r.scale_factor = j.value("scale_factor", 1.0);
  r.solution = {};
  r.solution.scheme = r.beamformers.scheme;
}

}  // namespace layercast
