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

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qp/ids.hpp"
#include "qp/localization.hpp"
#include "qp/msa.hpp"
#include "qp/operator.hpp"

namespace qp::cli {

using json = nlohmann::json;

inline constexpr const char* kConfigSchema = "qp-config/1";

/// Thrown after validation with every field-level diagnostic collected.
struct ConfigError : std::runtime_error {
    explicit ConfigError(std::vector<std::string> d)
        : std::runtime_error("invalid config"), diagnostics(std::move(d)) {}
    std::vector<std::string> diagnostics;
};

struct GreenConfig {
    ModelParams model;
    int N = 10;
    std::optional<double> singularity_tol;
    double residual_tol = 1e-8;
    /// Defaults to eps^(1/10).
    double delta0 = 0.0;
    double decay_threshold = 0.0;
};

struct MsaConfig {
    ModelParams model;
    ScaleParams scale;
    int stages = 1;
    long window = 100;
    int s_max = 4;
    bool plant_resonance = false;
    int bound_samples = 4;
    int band_samples = 50;
};

struct IdsConfig {
    IdsScan scan;
    bool etas_normalized = false;  // input was unsorted or had duplicates
};

struct LocalizeConfig {
    ModelParams model;
    LocalizationOptions options;
    double min_pass_fraction = 0.9;
};

struct DiophantineConfig {
    std::vector<double> omega;
    double tau = 0.5;
    double gamma = 0.0;
    int radius = 100;
};

struct Config {
    unsigned seed = 1;
    json raw;  // validated input, echoed into summaries
};

/// Checks the schema tag and the top-level keys; `section` is the experiment block.
Config parse_config(const json& j, const std::string& section);

GreenConfig green_config(const json& j);
MsaConfig msa_config(const json& j);
IdsConfig ids_config(const json& j);
LocalizeConfig localize_config(const json& j);
DiophantineConfig diophantine_config(const json& j);

json to_json(const GreenConfig& c);
json to_json(const MsaConfig& c);
json to_json(const IdsConfig& c);
json to_json(const LocalizeConfig& c);

}  // namespace qp::cli
