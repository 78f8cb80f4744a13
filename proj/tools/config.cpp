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
#include "config.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "qp/diophantine.hpp"
#include "qp/error.hpp"
#include "qp/serialize.hpp"

namespace qp::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Diagnostics {
public:
    void add(const std::string& path, const std::string& msg) { items_.push_back(path + ": " + msg); }
    bool empty() const { return items_.empty(); }
    void raise_if_any() const {
        if (!items_.empty()) throw ConfigError(items_);
    }

private:
    std::vector<std::string> items_;
};

/// Typed access to one JSON object; problems are recorded, defaults returned.
class Fields {
public:
    Fields(const json* obj, std::string path, Diagnostics& diag) : obj_(obj), path_(std::move(path)), diag_(&diag) {
        if (obj_ && !obj_->is_object()) {
            diag_->add(path_, "must be an object");
            obj_ = nullptr;
        }
    }

    bool has(const char* key) const { return obj_ && obj_->contains(key) && !obj_->at(key).is_null(); }
    std::string path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
    const json& at(const char* key) const { return obj_->at(key); }

    Fields section(const char* key, bool required) const {
        if (!has(key)) {
            if (required) diag_->add(path(key), "missing section");
            return Fields(nullptr, path(key), *diag_);
        }
        return Fields(&obj_->at(key), path(key), *diag_);
    }

    double real(const char* key, std::optional<double> def, double lo = -kInf, double hi = kInf, bool open_lo = false) {
        if (!has(key)) {
            if (!def) diag_->add(path(key), "required");
            return def.value_or(0.0);
        }
        const json& v = at(key);
        if (!v.is_number()) {
            diag_->add(path(key), "must be a number");
            return def.value_or(0.0);
        }
        const double x = v.get<double>();
        if (!std::isfinite(x) || x > hi || x < lo || (open_lo && x == lo)) {
            diag_->add(path(key), "value " + format_double(x) + " outside " + (open_lo ? "(" : "[") +
                                      format_double(lo) + ", " + format_double(hi) + "]");
            return def.value_or(0.0);
        }
        return x;
    }

    long integer(const char* key, std::optional<long> def, long lo, long hi) {
        if (!has(key)) {
            if (!def) diag_->add(path(key), "required");
            return def.value_or(lo);
        }
        const json& v = at(key);
        if (!v.is_number_integer()) {
            diag_->add(path(key), "must be an integer");
            return def.value_or(lo);
        }
        const long x = v.get<long>();
        if (x < lo || x > hi) {
            diag_->add(path(key), "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                                      std::to_string(hi) + "]");
            return def.value_or(lo);
        }
        return x;
    }

    bool flag(const char* key, bool def) {
        if (!has(key)) return def;
        if (!at(key).is_boolean()) {
            diag_->add(path(key), "must be true or false");
            return def;
        }
        return at(key).get<bool>();
    }

    std::string choice(const char* key, const std::string& def, const std::vector<std::string>& allowed) {
        if (!has(key)) return def;
        const json& v = at(key);
        if (v.is_string()) {
            const auto s = v.get<std::string>();
            for (const auto& a : allowed)
                if (a == s) return s;
        }
        std::string opts;
        for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
        diag_->add(path(key), "must be one of " + opts);
        return def;
    }

    /// List of finite numbers; `required` reports absence, empty lists always fail.
    std::vector<double> reals(const char* key, bool required, double lo = -kInf, double hi = kInf) {
        if (!has(key)) {
            if (required) diag_->add(path(key), "required");
            return {};
        }
        return list(at(key), path(key), lo, hi);
    }

    std::vector<double> list(const json& v, const std::string& p, double lo, double hi) {
        std::vector<double> out;
        if (!v.is_array()) {
            diag_->add(p, "must be a list of numbers");
            return out;
        }
        if (v.empty()) {
            diag_->add(p, "empty list");
            return out;
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>()) || v[i].get<double>() < lo ||
                v[i].get<double>() > hi) {
                diag_->add(p + "[" + std::to_string(i) + "]", "must be a number in [" + format_double(lo) + ", " +
                                                                  format_double(hi) + "]");
                continue;
            }
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    void only(std::initializer_list<const char*> allowed) {
        if (!obj_) return;
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = obj_->begin(); it != obj_->end(); ++it)
            if (!ok.count(it.key())) diag_->add(path(it.key().c_str()), "unknown field");
    }

    Diagnostics& diag() { return *diag_; }

private:
    const json* obj_;
    std::string path_;
    Diagnostics* diag_;
};

ModelParams read_model(Fields f, bool need_theta, bool need_energy, bool need_eps = true) {
    f.only({"d", "eps", "omega", "theta", "energy"});
    ModelParams m;
    m.d = static_cast<int>(f.integer("d", 1, 1, kMaxDim));
    m.eps = f.real("eps", need_eps ? std::nullopt : std::optional<double>(0.0), 0.0, 1.0);
    if (f.has("omega")) {
        m.omega = f.reals("omega", true, 0.0, 1.0);
        if (!m.omega.empty() && static_cast<int>(m.omega.size()) != m.d)
            f.diag().add(f.path("omega"), "needs " + std::to_string(m.d) + " entries, got " +
                                              std::to_string(m.omega.size()));
    } else {
        m.omega = default_frequency(m.d);
    }
    m.theta = need_theta ? f.real("theta", std::nullopt) : f.real("theta", 0.0);
    m.energy = need_energy ? f.real("energy", std::nullopt) : f.real("energy", 0.0);
    return m;
}

}  // namespace

Config parse_config(const json& j, const std::string& section) {
    Diagnostics diag;
    Config c;
    if (!j.is_object()) {
        diag.add("<root>", "config must be a JSON object");
        diag.raise_if_any();
    }
    Fields root(&j, "", diag);
    root.only({"schema", "seed", "model", "green", "msa", "ids", "localize", "diophantine"});
    if (!root.has("schema"))
        diag.add("schema", std::string("required (\"") + kConfigSchema + "\")");
    else if (!j.at("schema").is_string() || j.at("schema").get<std::string>() != kConfigSchema)
        diag.add("schema", "unsupported version " + j.at("schema").dump() + ", expected \"" + kConfigSchema + "\"");
    c.seed = static_cast<unsigned>(root.integer("seed", 1, 0, std::numeric_limits<unsigned>::max()));
    if (!root.has(section.c_str())) diag.add(section, "missing section for this experiment");
    diag.raise_if_any();
    c.raw = j;
    return c;
}

GreenConfig green_config(const json& j) {
    Diagnostics diag;
    Fields root(&j, "", diag);
    GreenConfig c;
    c.model = read_model(root.section("model", true), true, true);
    Fields g = root.section("green", true);
    g.only({"N", "singularity_tol", "residual_tol", "delta0", "decay_threshold"});
    c.N = static_cast<int>(g.integer("N", std::nullopt, 0, 2000));
    if (g.has("singularity_tol")) c.singularity_tol = g.real("singularity_tol", 0.0, 0.0, kInf, true);
    c.residual_tol = g.real("residual_tol", 1e-8, 0.0, kInf, true);
    c.delta0 = g.real("delta0", c.model.eps > 0 ? std::pow(c.model.eps, 0.1) : 1.0, 0.0, 1.0, true);
    c.decay_threshold = g.real("decay_threshold", 0.0, 0.0);
    if (c.model.d > 1 && std::pow(2.0 * c.N + 1, c.model.d) > static_cast<double>(kDenseLimit))
        diag.add("green.N", "cube exceeds the dense limit of " + std::to_string(kDenseLimit) + " sites");
    diag.raise_if_any();
    return c;
}

MsaConfig msa_config(const json& j) {
    Diagnostics diag;
    Fields root(&j, "", diag);
    MsaConfig c;
    c.model = read_model(root.section("model", true), true, true);
    Fields f = root.section("msa", true);
    f.only({"mode", "tau", "gamma", "c", "kappa", "rho", "n1", "delta0", "tilde_exponent", "case_factor", "stages",
            "window", "s_max", "plant_resonance", "bound_samples", "band_samples"});
    auto& p = c.scale;
    p.mode = f.choice("mode", "practical", {"theoretical", "practical"}) == "theoretical" ? ScheduleMode::theoretical
                                                                                           : ScheduleMode::practical;
    p.tau = f.real("tau", p.tau, 0.0, 1.0, true);
    p.gamma = f.real("gamma", p.gamma, 0.0, kInf, true);
    p.c = f.real("c", p.c, 1.0, kInf, true);
    p.kappa = f.real("kappa", p.kappa, 1.0, kInf, true);
    p.rho = f.real("rho", p.rho, 1.0, kInf);
    p.n1 = f.integer("n1", 0, 0, 1000000);
    p.delta0 = f.real("delta0", 0.0, 0.0, 1.0);
    p.tilde_exponent = f.real("tilde_exponent", p.tilde_exponent, 0.0, 1.0, true);
    p.case_factor = f.real("case_factor", p.case_factor, 0.0, kInf, true);
    c.stages = static_cast<int>(f.integer("stages", 1, 0, 64));
    c.window = f.integer("window", 100, 1, 100000);
    c.s_max = static_cast<int>(f.integer("s_max", 4, 1, 64));
    c.plant_resonance = f.flag("plant_resonance", false);
    c.bound_samples = static_cast<int>(f.integer("bound_samples", 4, 0, 1000));
    c.band_samples = static_cast<int>(f.integer("band_samples", 50, 0, 100000));
    if (c.stages > c.s_max) diag.add("msa.stages", "exceeds msa.s_max");
    if (c.model.eps <= 0.0) diag.add("model.eps", "must be > 0 for the multi-scale run");
    if (diag.empty()) {
        ScaleParams check = p;
        check.eps = c.model.eps;
        try {
            check.validate();
        } catch (const Error& e) {
            diag.add("msa", e.what());
        }
    }
    diag.raise_if_any();
    return c;
}

IdsConfig ids_config(const json& j) {
    Diagnostics diag;
    Fields root(&j, "", diag);
    IdsConfig c;
    const ModelParams m = read_model(root.section("model", true), false, false);
    Fields f = root.section("ids", true);
    f.only({"N", "thetas", "energies", "etas", "mu"});
    auto& s = c.scan;
    s.d = m.d;
    s.eps = m.eps;
    s.omega = m.omega;
    s.N = static_cast<int>(f.integer("N", std::nullopt, 1, 10000000));
    s.mu = f.real("mu", 0.1, 0.0, 0.5);
    if (f.has("thetas") && f.at("thetas").is_number_integer()) {
        const long n = f.integer("thetas", 32, 1, 100000);
        s.thetas = stratified_thetas(static_cast<int>(n));
    } else if (f.has("thetas")) {
        s.thetas = f.reals("thetas", true);
    } else {
        s.thetas = stratified_thetas(32);
    }
    if (!f.has("energies")) {
        diag.add("ids.energies", "required: empty E-grid");
    } else if (f.at("energies").is_object()) {
        Fields g = f.section("energies", true);
        g.only({"min", "max", "count"});
        const double lo = g.real("min", std::nullopt), hi = g.real("max", std::nullopt);
        const long n = g.integer("count", std::nullopt, 0, 1000000);
        if (n == 0) diag.add("ids.energies.count", "empty E-grid");
        if (hi < lo) diag.add("ids.energies.max", "below min");
        for (long i = 0; i < n; ++i) s.energies.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1.0));
    } else if (f.at("energies").is_array() && f.at("energies").empty()) {
        diag.add("ids.energies", "empty E-grid");
    } else {
        s.energies = f.reals("energies", true);
    }
    const auto etas = f.reals("etas", true, 0.0, 1.0);
    for (std::size_t i = 0; i < etas.size(); ++i)
        if (etas[i] <= 0.0) diag.add("ids.etas[" + std::to_string(i) + "]", "must be > 0");
    diag.raise_if_any();
    s.etas = normalize_etas(etas, &c.etas_normalized);
    return c;
}

LocalizeConfig localize_config(const json& j) {
    Diagnostics diag;
    Fields root(&j, "", diag);
    LocalizeConfig c;
    c.model = read_model(root.section("model", true), true, false);
    Fields f = root.section("localize", true);
    f.only({"N", "tau1", "phase_r_min", "phase_r_max", "r_min", "threshold", "boundary_fraction", "profile",
            "min_pass_fraction"});
    auto& o = c.options;
    o.N = static_cast<int>(f.integer("N", std::nullopt, 1, 100000));
    o.tau1 = f.real("tau1", o.tau1, 0.0, 1.0, true);
    o.phase_r_min = static_cast<int>(f.integer("phase_r_min", o.phase_r_min, 1, 1000000));
    o.phase_r_max = static_cast<int>(f.integer("phase_r_max", o.phase_r_max, 1, 1000000));
    o.r_min = f.real("r_min", o.r_min, 0.0);
    o.threshold = f.real("threshold", -1.0);
    o.boundary_fraction = f.real("boundary_fraction", o.boundary_fraction, 0.0, 1.0);
    o.keep_profiles = f.flag("profile", false);
    c.min_pass_fraction = f.real("min_pass_fraction", 0.9, 0.0, 1.0);
    if (o.phase_r_max < o.phase_r_min) diag.add("localize.phase_r_max", "below phase_r_min");
    if (c.model.eps <= 0.0) diag.add("model.eps", "must be > 0 for the decay threshold");
    if (std::pow(2.0 * o.N + 1, c.model.d) > static_cast<double>(kDenseLimit))
        diag.add("localize.N", "cube exceeds the dense limit of " + std::to_string(kDenseLimit) + " sites");
    diag.raise_if_any();
    return c;
}

DiophantineConfig diophantine_config(const json& j) {
    Diagnostics diag;
    Fields root(&j, "", diag);
    DiophantineConfig c;
    const ModelParams m = read_model(root.section("model", false), false, false, false);
    Fields f = root.section("diophantine", true);
    f.only({"tau", "gamma", "radius"});
    c.omega = m.omega;
    c.tau = f.real("tau", 0.5, 0.0, 1.0, true);
    c.gamma = f.real("gamma", std::nullopt, 0.0);
    c.radius = static_cast<int>(f.integer("radius", std::nullopt, 1, 100000000));
    diag.raise_if_any();
    return c;
}

json to_json(const GreenConfig& c) {
    json j = {{"model", qp::to_json(c.model)},
              {"N", c.N},
              {"residual_tol", c.residual_tol},
              {"delta0", c.delta0},
              {"decay_threshold", c.decay_threshold}};
    j["singularity_tol"] = c.singularity_tol ? json(*c.singularity_tol) : json(nullptr);
    return j;
}

json to_json(const MsaConfig& c) {
    return {{"model", qp::to_json(c.model)},       {"scale", qp::to_json(c.scale)},
            {"stages", c.stages},                  {"window", c.window},
            {"s_max", c.s_max},                    {"plant_resonance", c.plant_resonance},
            {"bound_samples", c.bound_samples},    {"band_samples", c.band_samples}};
}

json to_json(const IdsConfig& c) {
    const auto& s = c.scan;
    return {{"d", s.d},           {"eps", s.eps},     {"omega", s.omega}, {"N", s.N},
            {"thetas", s.thetas}, {"energies", s.energies}, {"etas", s.etas}, {"mu", s.mu}};
}

json to_json(const LocalizeConfig& c) {
    const auto& o = c.options;
    return {{"model", qp::to_json(c.model)},
            {"N", o.N},
            {"tau1", o.tau1},
            {"phase_r_min", o.phase_r_min},
            {"phase_r_max", o.phase_r_max},
            {"r_min", o.r_min},
            {"threshold", o.threshold},
            {"boundary_fraction", o.boundary_fraction},
            {"profile", o.keep_profiles},
            {"min_pass_fraction", c.min_pass_fraction}};
}

}  // namespace qp::cli
