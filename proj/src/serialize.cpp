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
#include "qp/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "qp/error.hpp"

namespace qp {

std::string format_double(double x) {
    if (std::isnan(x)) return "\"nan\"";
    if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    std::string s(buf);
    // Keep a float marker so the value reads back as floating point.
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

namespace {

void write_string(std::ostringstream& os, const std::string& s) { os << json(s).dump(); }

void emit(std::ostringstream& os, const json& j, int indent, int level) {
    const std::string pad(static_cast<std::size_t>(indent * (level + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * level), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{" << nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << "," << nl;
                first = false;
                os << pad;
                write_string(os, it.key());
                os << (indent > 0 ? ": " : ":");
                emit(os, it.value(), indent, level + 1);
            }
            os << nl << close << "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            // Short numeric arrays (points, complex pairs) stay on one line.
            bool flat = j.size() <= 8;
            for (const auto& v : j) flat = flat && v.is_primitive();
            if (flat || indent == 0) {
                os << "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) os << ", ";
                    emit(os, j[i], 0, 0);
                }
                os << "]";
                return;
            }
            os << "[" << nl;
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << "," << nl;
                os << pad;
                emit(os, j[i], indent, level + 1);
            }
            os << nl << close << "]";
            return;
        }
        case json::value_t::number_float:
            os << format_double(j.get<double>());
            return;
        default:
            os << j.dump();
    }
}

}  // namespace

std::string dump_json(const json& j, int indent) {
    std::ostringstream os;
    emit(os, j, indent, 0);
    os << "\n";
    return os.str();
}

double read_double(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return INFINITY;
        if (s == "-inf") return -INFINITY;
        if (s == "nan") return NAN;
    }
    throw Error("schema", "expected a number, got " + j.dump());
}

namespace {

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw Error("schema", std::string("missing field '") + key + "'");
    return j.at(key);
}

json complex_to_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }
std::complex<double> complex_from_json(const json& j) { return {read_double(j.at(0)), read_double(j.at(1))}; }

json points_to_json(const std::vector<HalfLatticePoint>& v) {
    json a = json::array();
    for (const auto& p : v) a.push_back(point_to_json(p));
    return a;
}

std::vector<HalfLatticePoint> points_from_json(const json& j, int d) {
    std::vector<HalfLatticePoint> v;
    for (const auto& p : j) v.push_back(point_from_json(p, d));
    return v;
}

json region_to_json(const Region& r) { return {{"parity", r.parity()}, {"points", points_to_json(r.points())}}; }

Region region_from_json(const json& j, int d) {
    return Region(d, field(j, "parity").get<unsigned>(), points_from_json(field(j, "points"), d));
}

json tagged_to_json(const std::vector<TaggedSite>& v) {
    json a = json::array();
    for (const auto& t : v) a.push_back({{"k", point_to_json(t.k)}, {"distance", t.distance}});
    return a;
}

std::vector<TaggedSite> tagged_from_json(const json& j, int d) {
    std::vector<TaggedSite> v;
    for (const auto& t : j) v.push_back({point_from_json(field(t, "k"), d), read_double(field(t, "distance"))});
    return v;
}

CaseTag case_from_string(const std::string& s) {
    if (s == "C1") return CaseTag::C1;
    if (s == "C2") return CaseTag::C2;
    throw Error("schema", "unknown case tag '" + s + "'");
}

}  // namespace

json point_to_json(const HalfLatticePoint& p) {
    json a = json::array();
    for (int i = 0; i < p.dim(); ++i) {
        if (p.doubled(i) % 2 == 0)
            a.push_back(p.doubled(i) / 2);
        else
            a.push_back(p.coord(i));
    }
    return a;
}

HalfLatticePoint point_from_json(const json& j, int d) {
    if (!j.is_array() || static_cast<int>(j.size()) != d) throw Error("schema", "point of wrong dimension: " + j.dump());
    std::vector<std::int64_t> twice(d);
    for (int i = 0; i < d; ++i) {
        const double x2 = 2.0 * read_double(j[i]);
        if (x2 != std::round(x2)) throw Error("schema", "coordinate not on the half-lattice: " + j.dump());
        twice[i] = static_cast<std::int64_t>(x2);
    }
    return HalfLatticePoint::from_doubled(twice);
}

json to_json(const ModelParams& m) {
    return {{"d", m.d}, {"eps", m.eps}, {"omega", m.omega}, {"theta", m.theta}, {"energy", m.energy}};
}

ModelParams model_from_json(const json& j) {
    ModelParams m;
    m.d = field(j, "d").get<int>();
    m.eps = read_double(field(j, "eps"));
    m.omega.clear();
    for (const auto& w : field(j, "omega")) m.omega.push_back(read_double(w));
    m.theta = read_double(field(j, "theta"));
    m.energy = read_double(field(j, "energy"));
    return m;
}

json to_json(const ScaleParams& p) {
    json j = {{"mode", to_string(p.mode)}, {"tau", p.tau},         {"gamma", p.gamma},
              {"c", p.c},                  {"kappa", p.kappa},     {"rho", p.rho},
              {"n1", p.n1},                {"delta0", p.delta0},   {"tilde_exponent", p.tilde_exponent},
              {"case_factor", p.case_factor}};
    return j;
}

ScaleParams scale_from_json(const json& j) {
    ScaleParams p;
    const auto mode = field(j, "mode").get<std::string>();
    if (mode == "theoretical")
        p.mode = ScheduleMode::theoretical;
    else if (mode == "practical")
        p.mode = ScheduleMode::practical;
    else
        throw Error("schema", "unknown schedule mode '" + mode + "'");
    p.tau = read_double(field(j, "tau"));
    p.gamma = read_double(field(j, "gamma"));
    p.c = read_double(field(j, "c"));
    p.kappa = read_double(field(j, "kappa"));
    p.rho = read_double(field(j, "rho"));
    p.n1 = field(j, "n1").get<long>();
    p.delta0 = read_double(field(j, "delta0"));
    p.tilde_exponent = read_double(field(j, "tilde_exponent"));
    p.case_factor = read_double(field(j, "case_factor"));
    return p;
}

json to_json(const ScaleState& st) {
    json j;
    j["s"] = st.s;
    j["log_delta"] = st.log_delta;
    j["delta"] = st.delta;
    j["N"] = st.N;
    j["gamma_rate"] = st.gamma_rate;
    j["theta"] = complex_to_json(st.theta);
    j["shifts"] = points_to_json(st.shifts);
    j["parity"] = st.parity;
    j["P"] = points_to_json(st.P);
    j["Q"] = {{"plus", tagged_to_json(st.Q.plus)},
              {"minus", tagged_to_json(st.Q.minus)},
              {"tilde_plus", tagged_to_json(st.Q.tilde_plus)},
              {"tilde_minus", tagged_to_json(st.Q.tilde_minus)},
              {"min_margin", st.Q.min_margin}};
    if (st.blocks)
        j["blocks"] = {{"omega", region_to_json(st.blocks->omega)},
                       {"omega_tilde", region_to_json(st.blocks->omega_tilde)},
                       {"A", region_to_json(st.blocks->A)}};
    else
        j["blocks"] = nullptr;
    json cases = json::array();
    for (auto c : st.case_history) cases.push_back(to_string(c));
    j["case_history"] = cases;
    if (st.selection) {
        const auto& s = *st.selection;
        json sel = {{"tag", to_string(s.tag)},
                    {"shift", point_to_json(s.shift)},
                    {"dist_tilde_minus_plus", s.dist_tilde_minus_plus},
                    {"dist_tilde_plus_minus", s.dist_tilde_plus_minus},
                    {"threshold", s.threshold}};
        sel["pair"] = s.pair ? json::array({point_to_json(s.pair->first), point_to_json(s.pair->second)}) : json(nullptr);
        j["selection"] = sel;
    } else {
        j["selection"] = nullptr;
    }
    if (st.root) {
        const auto& r = *st.root;
        json root = {{"theta", complex_to_json(r.theta)}, {"partner", complex_to_json(r.partner)},
                     {"asymmetry", r.asymmetry},         {"centre", complex_to_json(r.centre)},
                     {"radius", r.radius},               {"nominal_radius", r.nominal_radius},
                     {"count", r.count},                 {"samples", r.samples},
                     {"newton_iterations", r.newton_iterations}};
        root["z_next"] = r.z_next ? complex_to_json(*r.z_next) : json(nullptr);
        j["root"] = root;
    } else {
        j["root"] = nullptr;
    }
    return j;
}

ScaleState state_from_json(const json& j, int d) {
    ScaleState st;
    st.s = field(j, "s").get<int>();
    st.log_delta = read_double(field(j, "log_delta"));
    st.delta = read_double(field(j, "delta"));
    st.N = field(j, "N").get<long>();
    st.gamma_rate = read_double(field(j, "gamma_rate"));
    st.theta = complex_from_json(field(j, "theta"));
    st.shifts = points_from_json(field(j, "shifts"), d);
    st.parity = field(j, "parity").get<unsigned>();
    st.P = points_from_json(field(j, "P"), d);
    const json& q = field(j, "Q");
    st.Q.plus = tagged_from_json(field(q, "plus"), d);
    st.Q.minus = tagged_from_json(field(q, "minus"), d);
    st.Q.tilde_plus = tagged_from_json(field(q, "tilde_plus"), d);
    st.Q.tilde_minus = tagged_from_json(field(q, "tilde_minus"), d);
    st.Q.min_margin = read_double(field(q, "min_margin"));
    const json& b = field(j, "blocks");
    if (!b.is_null())
        st.blocks = BlockTemplate{region_from_json(field(b, "omega"), d), region_from_json(field(b, "omega_tilde"), d),
                                  region_from_json(field(b, "A"), d)};
    for (const auto& c : field(j, "case_history")) st.case_history.push_back(case_from_string(c.get<std::string>()));
    const json& s = field(j, "selection");
    if (!s.is_null()) {
        CaseSelection sel;
        sel.tag = case_from_string(field(s, "tag").get<std::string>());
        sel.shift = point_from_json(field(s, "shift"), d);
        sel.dist_tilde_minus_plus = read_double(field(s, "dist_tilde_minus_plus"));
        sel.dist_tilde_plus_minus = read_double(field(s, "dist_tilde_plus_minus"));
        sel.threshold = read_double(field(s, "threshold"));
        const json& p = field(s, "pair");
        if (!p.is_null()) sel.pair = std::make_pair(point_from_json(p.at(0), d), point_from_json(p.at(1), d));
        st.selection = sel;
    }
    const json& r = field(j, "root");
    if (!r.is_null()) {
        RootResult root;
        root.theta = complex_from_json(field(r, "theta"));
        root.partner = complex_from_json(field(r, "partner"));
        root.asymmetry = read_double(field(r, "asymmetry"));
        root.centre = complex_from_json(field(r, "centre"));
        root.radius = read_double(field(r, "radius"));
        root.nominal_radius = read_double(field(r, "nominal_radius"));
        root.count = field(r, "count").get<int>();
        root.samples = field(r, "samples").get<int>();
        root.newton_iterations = field(r, "newton_iterations").get<int>();
        if (!field(r, "z_next").is_null()) root.z_next = complex_from_json(r.at("z_next"));
        st.root = root;
    }
    return st;
}

json to_json(const BoundReport& b) {
    return {{"s", b.s},
            {"norm", b.norm},
            {"norm_bound", b.norm_bound},
            {"norm_bound_coarse", b.norm_bound_coarse},
            {"norm_margin", b.norm_margin},
            {"decay_rate", b.decay_rate},
            {"decay_radius", b.decay_radius},
            {"decay_margin", b.decay_margin},
            {"decay_pairs", b.decay_pairs},
            {"pass", b.pass}};
}

json to_json(const InvariantResult& r) {
    return {{"name", r.name}, {"pass", r.pass}, {"checked", r.checked}, {"detail", r.detail}};
}

json msa_dump(const MsaContext& ctx, int s_max, const std::vector<ScaleState>& stages, const json& extra) {
    json j;
    j["schema"] = kMsaSchema;
    j["model"] = to_json(ctx.model);
    j["scale"] = to_json(ctx.scale);
    j["window"] = ctx.window;
    j["s_max"] = s_max;
    json sched = json::array();
    for (const auto& e : ctx.sched.entries)
        sched.push_back({{"s", e.s},
                         {"log_delta", e.log_delta},
                         {"delta", e.delta},
                         {"N", e.N},
                         {"gamma_rate", e.gamma_rate},
                         {"symbolic", e.symbolic}});
    j["schedule"] = {{"entries", sched},
                     {"gamma_floor", ctx.sched.gamma_floor},
                     {"gamma_decreasing", ctx.sched.gamma_decreasing},
                     {"gamma_above_floor", ctx.sched.gamma_above_floor}};
    json st = json::array();
    for (const auto& s : stages) st.push_back(to_json(s));
    j["stages"] = st;
    j["results"] = extra;
    return j;
}

MsaDump msa_load(const json& j) {
    const auto schema = field(j, "schema").get<std::string>();
    if (schema != kMsaSchema) throw Error("schema", "unsupported schema '" + schema + "', expected " + kMsaSchema);
    MsaDump d;
    const ModelParams model = model_from_json(field(j, "model"));
    d.s_max = field(j, "s_max").get<int>();
    d.ctx = make_context(model, scale_from_json(field(j, "scale")), field(j, "window").get<long>(), d.s_max);
    for (const auto& s : field(j, "stages")) d.stages.push_back(state_from_json(s, model.d));
    if (j.contains("results")) d.extra = j.at("results");
    return d;
}

}  // namespace qp
