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
// qp: command-line driver for the experiments.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "qp/error.hpp"
#include "qp/diophantine.hpp"
#include "qp/green.hpp"
#include "qp/serialize.hpp"
#include "qp/torus.hpp"

namespace fs = std::filesystem;
using qp::json;

namespace {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

Level log_level() {
    const char* v = std::getenv("QP_LOG");
    if (!v) return Level::warn;
    const std::string s(v);
    if (s == "error" || s == "0") return Level::error;
    if (s == "info" || s == "2") return Level::info;
    if (s == "debug" || s == "3") return Level::debug;
    return Level::warn;
}

void log(Level l, const std::string& msg) {
    static const Level threshold = log_level();
    static const char* names[] = {"error", "warning", "info", "debug"};
    if (l <= threshold) std::cerr << "qp: " << names[static_cast<int>(l)] << ": " << msg << "\n";
}

struct Globals {
    std::string config;
    std::string out = "qp-out";
    int threads = 1;
    std::optional<unsigned> seed;
};

constexpr int kOk = 0, kError = 1, kBoundFailure = 2;

json read_json_file(const std::string& path) {
    if (path.empty()) throw qp::Error("config", "no --config file given");
    std::ifstream in(path);
    if (!in) throw qp::Error("config", "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw qp::Error("config", "'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_file(const Globals& g, const std::string& name, const std::string& text) {
    fs::create_directories(g.out);
    const fs::path p = fs::path(g.out) / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw qp::Error("io", "cannot write '" + p.string() + "'");
    log(Level::info, "wrote " + p.string());
}

std::string csv_num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return qp::format_double(x);
}

std::string csv_point(const qp::HalfLatticePoint& p) {
    std::string s;
    for (int i = 0; i < p.dim(); ++i) {
        if (i) s += ";";
        const std::int64_t x2 = p.doubled(i);
        s += x2 % 2 == 0 ? std::to_string(x2 / 2) : csv_num(p.coord(i));
    }
    return s;
}

class Csv {
public:
    explicit Csv(std::initializer_list<const char*> header) {
        bool first = true;
        for (const char* h : header) {
            os_ << (first ? "" : ",") << h;
            first = false;
        }
        os_ << "\n";
    }
    Csv& operator<<(const std::string& s) { return cell(s); }
    Csv& operator<<(const char* s) { return cell(s); }
    Csv& operator<<(double x) { return cell(csv_num(x)); }
    Csv& operator<<(std::size_t x) { return cell(std::to_string(x)); }
    Csv& operator<<(int x) { return cell(std::to_string(x)); }
    Csv& operator<<(long x) { return cell(std::to_string(x)); }
    Csv& operator<<(bool b) { return cell(b ? "1" : "0"); }
    void end() {
        os_ << "\n";
        fresh_ = true;
    }
    std::string str() const { return os_.str(); }

private:
    Csv& cell(const std::string& s) {
        os_ << (fresh_ ? "" : ",") << s;
        fresh_ = false;
        return *this;
    }
    std::ostringstream os_;
    bool fresh_ = true;
};

/// Top-level and section validation, reporting every problem at once.
template <class Parse>
auto load_config(const json& raw, const char* section, Parse parse) {
    std::vector<std::string> diags;
    qp::cli::Config top;
    try {
        top = qp::cli::parse_config(raw, section);
    } catch (const qp::cli::ConfigError& e) {
        diags = e.diagnostics;
        if (!raw.is_object()) throw;
    }
    try {
        auto c = parse(raw);
        if (!diags.empty()) throw qp::cli::ConfigError(diags);
        return std::make_pair(top, c);
    } catch (const qp::cli::ConfigError& e) {
        diags.insert(diags.end(), e.diagnostics.begin(), e.diagnostics.end());
        throw qp::cli::ConfigError(diags);
    }
}

json summary_head(const char* schema, const json& config, unsigned seed) {
    return {{"schema", schema}, {"config", config}, {"seed", seed}};
}

// ---------------------------------------------------------------------------

struct DiophantineFlags {
    std::vector<double> omega;
    std::optional<double> tau, gamma;
    std::optional<int> radius;
};

int run_diophantine(const Globals& g, const DiophantineFlags& f) {
    qp::cli::DiophantineConfig c;
    unsigned seed = g.seed.value_or(1);
    if (!g.config.empty()) {
        const json j = read_json_file(g.config);
        const auto [top, parsed] = load_config(j, "diophantine", qp::cli::diophantine_config);
        seed = g.seed.value_or(top.seed);
        c = parsed;
    } else {
        std::vector<std::string> missing;
        if (!f.gamma) missing.push_back("--gamma: required without --config");
        if (!f.radius) missing.push_back("--radius: required without --config");
        if (!missing.empty()) throw qp::cli::ConfigError(missing);
        c.omega = qp::default_frequency(1);
    }
    if (!f.omega.empty()) c.omega = f.omega;
    if (f.tau) c.tau = *f.tau;
    if (f.gamma) c.gamma = *f.gamma;
    if (f.radius) c.radius = *f.radius;

    const auto chk = qp::verify_frequency(c.omega, c.gamma, c.tau, c.radius);
    json j = summary_head("qp-diophantine/1",
                          {{"omega", c.omega}, {"tau", c.tau}, {"gamma", c.gamma}, {"radius", c.radius}}, seed);
    j["pass"] = chk.pass;
    j["worst_n"] = qp::point_to_json(chk.worst_n);
    j["margin"] = chk.margin;
    j["worst_value"] = chk.worst_value;
    const std::string text = qp::dump_json(j);
    std::cout << text;
    write_file(g, "diophantine.json", text);
    return chk.pass ? kOk : kBoundFailure;
}

// ---------------------------------------------------------------------------

int run_green(const Globals& g) {
    const json raw = read_json_file(g.config);
    const auto [top, c] = load_config(raw, "green", qp::cli::green_config);
    const unsigned seed = g.seed.value_or(top.seed);
    const auto& m = c.model;

    const qp::Region box = qp::Region::cube(m.d, c.N, qp::HalfLatticePoint::origin(m.d));
    const qp::OperatorInstance T = qp::assemble_T(box, m);
    std::optional<double> tol = c.singularity_tol;
    const qp::GreensFunction G = qp::invert(T, tol);
    log(Level::info, "inverted T on " + std::to_string(box.size()) + " sites");

    const std::complex<double> theta0 = qp::base_phase(m.energy);
    const auto good = qp::check_zero_good(box, m, theta0, c.delta0);
    const double gamma0 = m.eps > 0 ? 0.5 * std::abs(std::log(m.eps)) : INFINITY;
    const double norm_bound = std::pow(c.delta0, -2.0);

    json cert = {{"norm_bound", norm_bound}, {"gamma0", gamma0}, {"zero_good", good.is_good},
                 {"witnesses", good.witnesses.size()}};
    bool cert_ok = true;
    if (!good.is_good) {
        cert["status"] = "not-applicable";
    } else {
        try {
            const auto nc = qp::neumann_certificate(T, c.delta0, true);
            cert["status"] = "verified";
            cert["decay_margin"] = nc.decay_margin;
        } catch (const qp::Error& e) {
            if (e.code() != "certificate-violated") throw;
            cert_ok = false;
            cert["status"] = "violated";
            cert["detail"] = e.what();
            cert["decay_margin"] = e.value();
        }
    }

    const double max_rate = qp::max_rate_sentinel(m.eps);
    json fit;
    try {
        const auto f = qp::fit_decay(G, c.decay_threshold, max_rate);
        fit = {{"rate", f.rate},
               {"threshold_radius", f.threshold_radius},
               {"pairs", f.pairs},
               {"worst_x", qp::point_to_json(f.worst_x)},
               {"worst_y", qp::point_to_json(f.worst_y)}};
    } catch (const qp::Error& e) {
        fit = {{"error", e.what()}};
    }

    Csv csv({"x", "y", "abs_G", "bound"});
    const auto& pts = box.points();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const double bound = i == k ? norm_bound : std::exp(-gamma0 * qp::l1_distance(pts[i], pts[k]));
            csv << csv_point(pts[i]) << csv_point(pts[k]) << std::abs(G.entries(static_cast<Eigen::Index>(i),
                                                                               static_cast<Eigen::Index>(k)))
                << bound;
            csv.end();
        }

    const bool residual_ok = G.residual <= c.residual_tol;
    json j = summary_head("qp-green/1", qp::cli::to_json(c), seed);
    j["sites"] = box.size();
    j["norm"] = G.op_norm;
    j["exact_norm"] = G.exact_norm;
    j["residual"] = G.residual;
    j["residual_ok"] = residual_ok;
    j["condition_estimate"] = G.condition_estimate;
    j["smallest_singular_value"] = G.smallest_singular_value;
    j["decay_fit"] = fit;
    j["certificate"] = cert;
    j["pass"] = residual_ok && cert_ok;
    write_file(g, "green.csv", csv.str());
    write_file(g, "green.json", qp::dump_json(j));
    if (!residual_ok) log(Level::warn, "residual " + csv_num(G.residual) + " above tolerance");
    if (!cert_ok) log(Level::warn, "Neumann certificate violated");
    return residual_ok && cert_ok ? kOk : kBoundFailure;
}

// ---------------------------------------------------------------------------

struct MsaChecks {
    json results;
    bool pass = true;
};

MsaChecks msa_checks(const std::vector<qp::ScaleState>& h, const qp::MsaContext& ctx, int bound_samples,
                     int band_samples, unsigned seed) {
    MsaChecks out;
    json inv = json::array();
    for (const auto& r : qp::check_invariants(h, ctx)) {
        inv.push_back(qp::to_json(r));
        if (!r.pass) {
            out.pass = false;
            log(Level::warn, "invariant " + r.name + " failed: " + r.detail);
        }
    }
    json bounds = json::array();
    std::size_t singular = 0;
    if (bound_samples > 0)
        for (const auto& b : qp::sample_bound_checks(h, ctx, bound_samples, seed, 1500, &singular)) {
            json e = qp::to_json(b.report);
            e["seed_sites"] = b.seed.size();
            e["region_sites"] = b.region.size();
            bounds.push_back(e);
            out.pass = out.pass && b.report.pass;
        }
    json band = nullptr;
    if (h.size() >= 2 && band_samples > 0) {
        try {
            const auto b = qp::stage1_determinant_band(h, ctx, band_samples, seed);
            band = {{"min_ratio", b.min_ratio}, {"max_ratio", b.max_ratio}, {"constant", b.constant},
                    {"samples", b.samples}};
        } catch (const qp::Error& e) {
            band = {{"error", e.what()}};
        }
    }
    if (singular) log(Level::info, std::to_string(singular) + " sampled region(s) singular at working precision");
    out.results = {{"invariants", inv},
                   {"bounds", bounds},
                   {"bounds_requested", bound_samples},
                   {"bounds_skipped_singular", singular},
                   {"determinant_band", band},
                   {"pass", out.pass}};
    return out;
}

std::string stage_csv(const std::vector<qp::ScaleState>& h) {
    Csv csv({"s", "case", "N", "log_delta", "delta", "gamma_rate", "theta_re", "theta_im", "sites_P", "q_plus",
             "q_minus", "q_min_margin", "omega_sites", "omega_tilde_sites", "root_count", "root_asymmetry"});
    for (const auto& st : h) {
        csv << st.s << (st.case_history.empty() ? "-" : qp::to_string(st.case_history.back())) << st.N
            << st.log_delta << st.delta << st.gamma_rate << st.theta.real() << st.theta.imag() << st.P.size()
            << st.Q.plus.size() << st.Q.minus.size() << st.Q.min_margin;
        if (st.blocks)
            csv << st.blocks->omega.size() << st.blocks->omega_tilde.size();
        else
            csv << "" << "";
        if (st.root)
            csv << st.root->count << st.root->asymmetry;
        else
            csv << "" << "";
        csv.end();
    }
    return csv.str();
}

std::string bounds_csv(const json& bounds) {
    Csv csv({"index", "s", "region_sites", "norm", "norm_bound", "norm_margin", "decay_rate", "decay_radius",
             "decay_margin", "pass"});
    std::size_t i = 0;
    for (const auto& b : bounds) {
        csv << i++ << b["s"].get<int>() << b["region_sites"].get<std::size_t>() << qp::read_double(b["norm"])
            << qp::read_double(b["norm_bound"]) << qp::read_double(b["norm_margin"])
            << qp::read_double(b["decay_rate"]) << qp::read_double(b["decay_radius"])
            << qp::read_double(b["decay_margin"]) << b["pass"].get<bool>();
        csv.end();
    }
    return csv.str();
}

int run_msa(const Globals& g, std::optional<int> stages, std::optional<long> window) {
    const json raw = read_json_file(g.config);
    auto [top, c] = load_config(raw, "msa", qp::cli::msa_config);
    const unsigned seed = g.seed.value_or(top.seed);
    if (stages) c.stages = *stages;
    if (window) c.window = *window;
    if (c.stages < 0 || c.stages > c.s_max)
        throw qp::cli::ConfigError({"--stages: must lie in [0, msa.s_max]"});
    if (c.window < 1) throw qp::cli::ConfigError({"--window: must be >= 1"});

    auto ctx = qp::make_context(c.model, c.scale, c.window, c.s_max);
    if (c.plant_resonance) {
        ctx = qp::make_context(qp::plant_stage1_resonance(ctx), c.scale, c.window, c.s_max);
        log(Level::info, "planted theta = " + csv_num(ctx.model.theta));
    }
    const auto h = qp::run_msa(ctx, c.stages);
    log(Level::info, "ran " + std::to_string(c.stages) + " stage(s)");
    const auto checks = msa_checks(h, ctx, c.bound_samples, c.band_samples, seed);

    json extra = checks.results;
    extra["config"] = qp::cli::to_json(c);
    extra["seed"] = seed;
    write_file(g, "msa.json", qp::dump_json(qp::msa_dump(ctx, c.s_max, h, extra)));
    write_file(g, "msa.csv", stage_csv(h));
    write_file(g, "msa_bounds.csv", bounds_csv(checks.results["bounds"]));
    return checks.pass ? kOk : kBoundFailure;
}

int verify_msa(const Globals& g, const std::string& dump_path) {
    const json stored = read_json_file(dump_path.empty() ? g.config : dump_path);
    const qp::MsaDump d = qp::msa_load(stored);
    if (d.stages.empty()) throw qp::Error("schema", "dump has no stages");
    const int stages = static_cast<int>(d.stages.size()) - 1;
    const auto rerun = qp::run_msa(d.ctx, stages);

    json mismatched = json::array();
    for (std::size_t i = 0; i < d.stages.size(); ++i) {
        const std::string a = qp::dump_json(stored["stages"][i]);
        const std::string b = qp::dump_json(qp::to_json(rerun[i]));
        const std::string c = qp::dump_json(qp::to_json(d.stages[i]));
        if (a != b || a != c) {
            mismatched.push_back(i);
            log(Level::warn, "stage " + std::to_string(i) + " differs from the re-run");
        }
    }
    const unsigned seed = g.seed.value_or(d.extra.value("seed", 1u));
    const auto checks = msa_checks(d.stages, d.ctx, 0, 0, seed);

    json j = {{"schema", "qp-msa-verify/1"},
              {"source", fs::path(dump_path.empty() ? g.config : dump_path).filename().string()},
              {"stages", d.stages.size()},
              {"stages_match", mismatched.empty()},
              {"mismatched_stages", mismatched},
              {"invariants", checks.results["invariants"]}};
    const bool pass = mismatched.empty() && checks.pass;
    j["pass"] = pass;
    const std::string text = qp::dump_json(j);
    write_file(g, "msa_verify.json", text);
    std::cout << (pass ? "verified" : "FAILED") << ": " << d.stages.size() << " stage(s), "
              << (mismatched.empty() ? "re-run identical" : std::to_string(mismatched.size()) + " mismatched")
              << ", invariants " << (checks.pass ? "hold" : "violated") << "\n";
    return pass ? kOk : kBoundFailure;
}

// ---------------------------------------------------------------------------

int run_ids(const Globals& g) {
    const json raw = read_json_file(g.config);
    auto [top, c] = load_config(raw, "ids", qp::cli::ids_config);
    const unsigned seed = g.seed.value_or(top.seed);
    if (c.etas_normalized) {
        std::string list;
        for (double e : c.scan.etas) list += (list.empty() ? "" : ", ") + csv_num(e);
        log(Level::warn, "ids.etas was not sorted and unique; normalized to [" + list + "]");
    }
    c.scan.threads = g.threads;
    const auto rep = qp::holder_scan(c.scan);

    Csv csv({"theta", "E", "eta", "count", "density", "bound", "pass"});
    for (const auto& cell : rep.cells) {
        csv << cell.theta << cell.energy << cell.eta << cell.count << cell.density << cell.bound << cell.pass;
        csv.end();
    }
    json j = summary_head("qp-ids/1", qp::cli::to_json(c), seed);
    j["etas_normalized"] = c.etas_normalized;
    j["sites"] = rep.sites;
    j["theta_samples"] = c.scan.thetas.size();
    j["cells"] = rep.cells.size();
    j["fitted_exponent"] = rep.fitted_exponent;
    j["min_exponent"] = rep.min_exponent;
    j["min_exponent_energy"] = rep.min_exponent_energy;
    j["worst"] = {{"theta", rep.worst.theta}, {"E", rep.worst.energy},       {"eta", rep.worst.eta},
                  {"count", rep.worst.count}, {"density", rep.worst.density}, {"bound", rep.worst.bound},
                  {"ratio", rep.worst_ratio}};
    j["jittered"] = rep.jittered;
    j["pass"] = rep.all_pass;
    write_file(g, "ids.csv", csv.str());
    write_file(g, "ids.json", qp::dump_json(j));
    return rep.all_pass ? kOk : kBoundFailure;
}

// ---------------------------------------------------------------------------

int run_localize(const Globals& g) {
    const json raw = read_json_file(g.config);
    const auto [top, c] = load_config(raw, "localize", qp::cli::localize_config);
    const unsigned seed = g.seed.value_or(top.seed);
    const auto rep = qp::localization_report(c.model, c.options);

    Csv csv({"index", "eigenvalue", "center", "rate", "boundary", "pass"});
    for (const auto& v : rep.vectors) {
        csv << v.index << v.eigenvalue << csv_point(v.center) << v.rate << v.boundary << v.pass;
        csv.end();
    }
    json viol = json::array();
    for (const auto& n : rep.phase_violations) viol.push_back(qp::point_to_json(n));
    json j = summary_head("qp-localize/1", qp::cli::to_json(c), seed);
    j["phase_condition"] = rep.phase_condition;
    j["phase_violations"] = viol;
    j["threshold"] = rep.threshold;
    j["vectors"] = rep.vectors.size();
    j["interior"] = rep.interior;
    j["interior_pass"] = rep.interior_pass;
    j["pass_fraction"] = rep.pass_fraction;
    j["mean_rate_interior"] = rep.mean_rate_interior;
    j["mean_rate_boundary"] = rep.mean_rate_boundary;
    j["max_residual"] = rep.max_residual;
    j["histogram"] = {{"bin_width", rep.bin_width}, {"counts", rep.histogram}};
    const bool pass = rep.phase_condition && rep.pass_fraction >= c.min_pass_fraction;
    j["pass"] = pass;
    write_file(g, "localize.csv", csv.str());
    write_file(g, "localize.json", qp::dump_json(j));
    if (c.options.keep_profiles) {
        Csv prof({"index", "distance", "log_abs_v", "resolved"});
        for (std::size_t i = 0; i < rep.profiles.size(); ++i)
            for (const auto& e : rep.profiles[i]) {
                prof << i << e.distance << e.log_abs << e.resolved;
                prof.end();
            }
        write_file(g, "localize_profile.csv", prof.str());
    }
    if (!rep.phase_condition)
        log(Level::warn, "phase condition fails (" + std::to_string(rep.phase_violations.size()) + " violations)");
    return pass ? kOk : kBoundFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qp: experiments for quasi-periodic Schrodinger operators"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "Experiment config (JSON)");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads for scans")->check(CLI::Range(1, 1024));
    app.add_option("--seed", g.seed, "Overrides the config seed");

    DiophantineFlags df;
    auto* dio = app.add_subcommand("diophantine", "Check a frequency against the Diophantine condition");
    dio->add_option("--omega", df.omega, "Frequency components");
    dio->add_option("--tau", df.tau, "Exponent");
    dio->add_option("--gamma", df.gamma, "Constant");
    dio->add_option("--radius", df.radius, "Scan radius")->check(CLI::PositiveNumber);

    auto* green = app.add_subcommand("green", "Invert T on a cube and test the a-priori bounds");

    auto* msa = app.add_subcommand("msa", "Multi-scale analysis");
    msa->require_subcommand(1);
    std::optional<int> stages;
    std::optional<long> window;
    auto* msa_run = msa->add_subcommand("run", "Run the stage induction and check invariants");
    msa_run->add_option("--stages", stages, "Number of stages past stage 0");
    msa_run->add_option("--window", window, "Window radius");
    std::string dump;
    auto* msa_verify = msa->add_subcommand("verify", "Re-run a dump and re-check its invariants");
    msa_verify->add_option("dump", dump, "msa.json written by 'msa run' (default: --config)");

    auto* ids = app.add_subcommand("ids", "Integrated density of states");
    ids->require_subcommand(1);
    auto* ids_scan = ids->add_subcommand("scan", "Window counts against the Holder bound");

    auto* loc = app.add_subcommand("localize", "Eigenvector decay on a cube");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kError;
    }

    try {
        if (*dio) return run_diophantine(g, df);
        if (*green) return run_green(g);
        if (*msa_run) return run_msa(g, stages, window);
        if (*msa_verify) return verify_msa(g, dump);
        if (*ids_scan) return run_ids(g);
        if (*loc) return run_localize(g);
    } catch (const qp::cli::ConfigError& e) {
        for (const auto& d : e.diagnostics) std::cerr << "qp: config error: " << d << "\n";
        return kError;
    } catch (const qp::Error& e) {
        std::cerr << "qp: error [" << e.code() << "]: " << e.what() << "\n";
        return kError;
    } catch (const std::exception& e) {
        std::cerr << "qp: error: " << e.what() << "\n";
        return kError;
    }
    return kError;
}
