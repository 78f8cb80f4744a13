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
// Runs the qp binary end to end; QP_BINARY is set by the build.
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string err;
};

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qp_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

Run qp_run(const std::string& args, const fs::path& dir) {
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(QP_BINARY) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                            err.string();
    const int raw = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.err = slurp(err);
    return r;
}

const char* kGreen =
    R"({"schema":"qp-config/1","model":{"d":1,"eps":1e-3,"theta":0.1,"energy":0.3},"green":{"N":50}})";

}  // namespace

TEST_CASE("green smoke run writes csv and json") {
    const auto dir = scratch("green");
    write(dir / "cfg.json", kGreen);
    const auto r = qp_run("green --config " + (dir / "cfg.json").string() + " --out " + (dir / "a").string(), dir);
    CHECK(r.code == 0);
    REQUIRE(fs::exists(dir / "a" / "green.csv"));
    REQUIRE(fs::exists(dir / "a" / "green.json"));
    const auto j = nlohmann::json::parse(slurp(dir / "a" / "green.json"));
    CHECK(j["sites"] == 101);
    CHECK(j["pass"] == true);
    // 101 x 101 entries plus the header.
    const std::string csv = slurp(dir / "a" / "green.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 101 * 101 + 1);
    CHECK(csv.rfind("x,y,abs_G,bound\n", 0) == 0);
}

TEST_CASE("identical configs give byte-identical outputs") {
    const auto dir = scratch("rerun");
    write(dir / "cfg.json", kGreen);
    for (const char* out : {"a", "b"})
        REQUIRE(qp_run("--out " + (dir / out).string() + " green --config " + (dir / "cfg.json").string(), dir).code ==
                0);
    for (const char* f : {"green.csv", "green.json"}) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
}

TEST_CASE("empty energy grid is rejected with the field name") {
    const auto dir = scratch("empty_grid");
    write(dir / "cfg.json",
          R"({"schema":"qp-config/1","model":{"d":1,"eps":1e-3},"ids":{"N":50,"thetas":2,"energies":[],"etas":[0.01]}})");
    const auto r = qp_run("ids scan --config " + (dir / "cfg.json").string() + " --out " + (dir / "o").string(), dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("ids.energies") != std::string::npos);
    CHECK(!fs::exists(dir / "o" / "ids.csv"));
}

TEST_CASE("invalid fields are all reported") {
    const auto dir = scratch("invalid");
    write(dir / "cfg.json",
          R"({"schema":"qp-config/1","model":{"d":1,"eps":2,"omgea":[0.3]},"green":{"N":-1}})");
    const auto r = qp_run("green --config " + (dir / "cfg.json").string() + " --out " + (dir / "o").string(), dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("model.eps") != std::string::npos);
    CHECK(r.err.find("model.omgea: unknown field") != std::string::npos);
    CHECK(r.err.find("model.theta: required") != std::string::npos);
    CHECK(r.err.find("green.N") != std::string::npos);
}

TEST_CASE("unsorted eta list is normalized with a warning") {
    const auto dir = scratch("etas");
    write(dir / "cfg.json", R"({"schema":"qp-config/1","model":{"d":1,"eps":1e-3},
          "ids":{"N":100,"thetas":2,"energies":{"min":-1,"max":1,"count":5},"etas":[0.01,0.001,0.01]}})");
    const auto r = qp_run("ids scan --config " + (dir / "cfg.json").string() + " --out " + (dir / "o").string(), dir);
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
    const auto j = nlohmann::json::parse(slurp(dir / "o" / "ids.json"));
    CHECK(j["config"]["etas"] == nlohmann::json::array({0.001, 0.01}));
    CHECK(j["etas_normalized"] == true);
}

TEST_CASE("msa run output verifies, a tampered dump does not") {
    const auto dir = scratch("msa");
    write(dir / "cfg.json", R"({"schema":"qp-config/1","seed":3,"model":{"d":1,"eps":1e-4,"theta":0.1,"energy":-0.5},
          "msa":{"c":1.3,"n1":2,"delta0":1e-3,"tilde_exponent":0.5,"case_factor":1,"plant_resonance":true}})");
    const auto run = qp_run("msa run --config " + (dir / "cfg.json").string() + " --stages 2 --window 1000 --out " +
                                (dir / "o").string(),
                            dir);
    CHECK(run.code == 0);
    const fs::path dump = dir / "o" / "msa.json";
    REQUIRE(fs::exists(dump));
    CHECK(fs::exists(dir / "o" / "msa.csv"));
    CHECK(qp_run("msa verify " + dump.string() + " --out " + (dir / "v").string(), dir).code == 0);

    auto j = nlohmann::json::parse(slurp(dump));
    j["stages"][1]["theta"][0] = j["stages"][1]["theta"][0].get<double>() + 1e-9;
    write(dir / "bad.json", j.dump());
    CHECK(qp_run("msa verify " + (dir / "bad.json").string() + " --out " + (dir / "v2").string(), dir).code == 2);
}

TEST_CASE("diophantine flags without a config") {
    const auto dir = scratch("dio");
    const auto r = qp_run("diophantine --tau 0.5 --gamma 0.1 --radius 500 --out " + (dir / "o").string(), dir);
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "stdout.txt"));
    CHECK(j["pass"] == true);
    CHECK(j.contains("worst_n"));
    CHECK(j.contains("margin"));
    CHECK(qp_run("diophantine --tau 0.5 --gamma 0.9 --radius 500 --out " + (dir / "o").string(), dir).code == 2);
}
