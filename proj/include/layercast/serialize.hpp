// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON form of the model types. Complex numbers are [re, im] pairs, vectors
// of them are arrays of pairs, and every other field maps to a plain number,
// array or object with the same name as the member.

#include "layercast/beamform.hpp"
#include "layercast/model.hpp"
#include "layercast/superlayer.hpp"

#include <json.hpp>

namespace layercast {

using Json = nlohmann::json;

Json complex_vector_to_json(const CVector& v);
CVector complex_vector_from_json(const Json& j);

void to_json(Json& j, const VideoProfile& p);
void from_json(const Json& j, VideoProfile& p);
void to_json(Json& j, const GroupConfig& g);
void from_json(const Json& j, GroupConfig& g);
void to_json(Json& j, const ChannelState& s);
void from_json(const Json& j, ChannelState& s);
void to_json(Json& j, const ChannelEnsemble& e);
void from_json(const Json& j, ChannelEnsemble& e);
void to_json(Json& j, const ProblemInstance& inst);
void from_json(const Json& j, ProblemInstance& inst);
void to_json(Json& j, const LayerSelection& s);
void from_json(const Json& j, LayerSelection& s);
void to_json(Json& j, const LayerRange& r);
void from_json(const Json& j, LayerRange& r);
void to_json(Json& j, const SuperLayerPlan& plan);
void from_json(const Json& j, SuperLayerPlan& plan);
void to_json(Json& j, const BeamformerSet& b);
void from_json(const Json& j, BeamformerSet& b);
// Beamformers and scalar diagnostics; the relaxation matrices are left out.
void to_json(Json& j, const PowerResult& r);
void from_json(const Json& j, PowerResult& r);

SchemeKind scheme_from_string(const std::string& name);
PowerMethod power_method_from_string(const std::string& name);

}  // namespace layercast
