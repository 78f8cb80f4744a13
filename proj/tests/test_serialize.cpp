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
#include <doctest.h>

#include <cmath>
#include <limits>

#include "qp/error.hpp"
#include "qp/serialize.hpp"
#include "support.hpp"

using namespace qp;

TEST_CASE("float formatting keeps 17 significant digits") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1.0");
    CHECK(format_double(-2.5e-300) == "-2.5e-300");
    CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "\"inf\"");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "\"-inf\"");
    CHECK(format_double(std::nan("")) == "\"nan\"");

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-30, 30);
    for (int i = 0; i < 2000; ++i) {
        const double x = std::exp(u(rng)) * (i % 2 ? 1 : -1);
        CHECK(std::stod(format_double(x)) == x);
    }
}

TEST_CASE("dump_json is stable and round-trips non-finite values") {
    json j = {{"b", 1.0}, {"a", json::array({0.5, -0.25})}, {"c", std::numeric_limits<double>::infinity()},
              {"n", 3}, {"s", "x"}, {"z", nullptr}};
    const std::string text = dump_json(j);
    CHECK(text == dump_json(json::parse(text)));
    const json back = json::parse(text);
    CHECK(read_double(back["c"]) == std::numeric_limits<double>::infinity());
    CHECK(back["n"].is_number_integer());
    CHECK(read_double(back["b"]) == 1.0);
    CHECK_THROWS_AS(read_double(json("oops")), Error);
}

TEST_CASE("half-lattice points serialize exactly") {
    const auto p = HalfLatticePoint::from_doubled({3, -4});
    const json j = point_to_json(p);
    CHECK(j.dump() == "[1.5,-2]");
    CHECK(point_from_json(j, 2) == p);
    CHECK_THROWS_AS(point_from_json(json::array({0.25, 0}), 2), Error);
    CHECK_THROWS_AS(point_from_json(json::array({1}), 2), Error);
}

TEST_CASE("msa dump reloads to identical stages") {
    auto ctx = qptest::desk_context(1, -0.5, 1000, 2, 1e-3);
    const auto h = run_msa(ctx, 2);
    const json dumped = json::parse(dump_json(msa_dump(ctx, 2, h, json::object())));
    const MsaDump d = msa_load(dumped);
    REQUIRE(d.stages.size() == h.size());
    for (std::size_t s = 0; s < h.size(); ++s) {
        CAPTURE(s);
        CHECK(dump_json(to_json(d.stages[s])) == dump_json(to_json(h[s])));
        CHECK(d.stages[s].theta == h[s].theta);
        CHECK(d.stages[s].P == h[s].P);
    }
    CHECK(d.ctx.model.theta == ctx.model.theta);
    CHECK(d.ctx.window == ctx.window);
    const auto again = run_msa(d.ctx, 2);
    CHECK(dump_json(to_json(again.back())) == dump_json(to_json(h.back())));

    json wrong = dumped;
    wrong["schema"] = "qp-msa/0";
    CHECK_THROWS_WITH_AS(msa_load(wrong), doctest::Contains("schema"), Error);
    json missing = dumped;
    missing["stages"][0].erase("P");
    CHECK_THROWS_WITH_AS(msa_load(missing), doctest::Contains("'P'"), Error);
}
