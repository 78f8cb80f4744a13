/* Copyright 2026 The qplab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qp/msa.hpp"

namespace qp {

using json = nlohmann::json;

inline constexpr const char* kMsaSchema = "qp-msa/1";

/// %.17g; non-finite values become the strings "inf", "-inf", "nan".
std::string format_double(double x);
/// Deterministic JSON text: sorted keys, floats via format_double.
std::string dump_json(const json& j, int indent = 2);
/// Accepts numbers and the non-finite strings written by dump_json.
double read_double(const json& j);

json point_to_json(const HalfLatticePoint& p);
HalfLatticePoint point_from_json(const json& j, int d);

json to_json(const ModelParams& m);
ModelParams model_from_json(const json& j);
json to_json(const ScaleParams& p);
ScaleParams scale_from_json(const json& j);

json to_json(const ScaleState& st);
ScaleState state_from_json(const json& j, int d);
json to_json(const BoundReport& b);
json to_json(const InvariantResult& r);

struct MsaDump {
    MsaContext ctx;
    int s_max = 0;
    std::vector<ScaleState> stages;
    json extra;  // invariants, bounds, band as written
};

json msa_dump(const MsaContext& ctx, int s_max, const std::vector<ScaleState>& stages, const json& extra);
/// Throws "schema" on a missing field or version mismatch.
MsaDump msa_load(const json& j);

}  // namespace qp
