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
#include <random>

#include "qp/error.hpp"
#include "qp/green.hpp"
#include "qp/msa.hpp"
#include "qp/torus.hpp"
#include "support.hpp"

using namespace qp;

namespace {

HalfLatticePoint P1(std::int64_t a) { return HalfLatticePoint::integer({a}); }
HalfLatticePoint P2(std::int64_t a, std::int64_t b) { return HalfLatticePoint::integer({a, b}); }

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

// Independent threshold test: distance of x + iy to Z via rounding.
double torus_dist(std::complex<double> z) {
    const double a = z.real() - std::round(z.real());
    return std::sqrt(a * a + z.imag() * z.imag());
}

}  // namespace

TEST_CASE("schedule") {
    ScaleParams p;
    p.eps = 1e-10;
    CHECK(schedule(p, 0).entries[0].delta == doctest::Approx(0.1).epsilon(1e-14));

    // Frozen from a 40-digit evaluation of the recursion.
    p.eps = 1e-3;
    p.gamma = 0.1;
    p.tau = 0.5;
    p.c = 1.03;
    auto t = schedule(p, 3);
    CHECK(t.entries[1].log_delta == doctest::Approx(-4.0417206360548077).epsilon(1e-14));
    CHECK(t.entries[1].N == 2.0);
    CHECK(t.entries[1].gamma_rate == doctest::Approx(2.757437969488976e-05).epsilon(1e-10));
    CHECK(t.gamma_decreasing);
    // Representable couplings sit outside the asymptotic regime of the rate floor.
    CHECK_FALSE(t.gamma_above_floor);

    p.c = 1.05;  // 1.05^20 > 2
    CHECK(code_of([&] { schedule(p, 2); }) == "c-constraint");

    auto q = qptest::desk_scale(1e-3);
    q.eps = 1e-4;
    auto u = schedule(q, 4);
    for (int s = 0; s < 4; ++s) {
        CHECK(u.entries[s + 1].log_delta == doctest::Approx(3.0 * u.entries[s].log_delta));
        if (s >= 1) CHECK(u.entries[s + 1].N == std::ceil(u.entries[s].N * u.entries[s].N));
    }
    CHECK(u.entries[1].N == 2.0);
    CHECK(u.gamma_decreasing);
    CHECK(code_of([&] { schedule(q, -1); }) == "invalid-scale");
}

TEST_CASE("rate floor holds deep in the asymptotic regime") {
    ScaleParams p;
    p.log_eps = -1e30;
    p.gamma = 0.1;
    p.tau = 0.5;
    p.c = 1.03;
    auto t = schedule(p, 20);
    CHECK(t.gamma_decreasing);
    CHECK(t.gamma_above_floor);
    for (const auto& e : t.entries) CHECK(e.symbolic);
    // log delta itself leaves double range after ~16 stages
    for (std::size_t s = 1; s < t.entries.size(); ++s)
        if (std::isfinite(t.entries[s].log_delta)) CHECK(t.entries[s].log_delta < t.entries[s - 1].log_delta);
    CHECK(std::isfinite(t.entries[10].log_delta));
}

TEST_CASE("stage zero") {
    auto mk = [](double E) {
        auto m = qptest::model(1, 1e-3, 0.2, E);
        return make_context(m, qptest::desk_scale(1e-2), 20, 1);
    };
    CHECK(std::abs(init_stage0(mk(1.0)).theta) < 1e-15);
    CHECK(init_stage0(mk(0.0)).theta.real() == doctest::Approx(0.25).epsilon(1e-15));
    auto st = init_stage0(mk(2.0));
    CHECK(st.theta.imag() == doctest::Approx(std::acosh(2.0) / (2 * M_PI)).epsilon(1e-15));
    CHECK(std::abs(std::cos(2.0 * M_PI * st.theta) - 2.0) < 1e-14);
    CHECK(st.P.size() == 41);
    CHECK(code_of([&] { init_stage0(mk(2.5)); }) == "energy-out-of-range");
}

TEST_CASE("classify sites") {
    auto m = qptest::model(1, 1e-3, 0.0, 0.3);
    auto ctx = make_context(m, qptest::desk_scale(1e-2), 200, 1);

    ScaleState zero = init_stage0(ctx);
    zero.delta = 0.0;
    zero.log_delta = -std::numeric_limits<double>::infinity();
    auto z = classify_sites(zero, ctx);
    CHECK(z.plus.empty());
    CHECK(z.minus.empty());
    CHECK(z.tilde_plus.empty());
    CHECK(z.tilde_minus.empty());

    // theta + 7 omega = theta_0 exactly
    ctx.model.theta = base_phase(0.3).real() - 7.0 * m.omega[0];
    auto st = init_stage0(ctx);
    bool hit = false, hit_t = false;
    for (const auto& t : st.Q.minus) hit = hit || t.k == P1(7);
    for (const auto& t : st.Q.tilde_minus) hit_t = hit_t || t.k == P1(7);
    CHECK(hit);
    CHECK(hit_t);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 5; ++trial) {
        ctx.model.theta = u(rng);
        auto s = init_stage0(ctx);
        const double d0 = s.delta, dt = std::sqrt(d0);
        std::size_t np = 0, nm = 0, ntp = 0, ntm = 0;
        for (long k = -200; k <= 200; ++k) {
            const double a = ctx.model.theta + k * m.omega[0];
            const double dp = torus_dist(a + s.theta), dm = torus_dist(a - s.theta);
            np += dp < d0;
            nm += dm < d0;
            ntp += dp < dt;
            ntm += dm < dt;
        }
        CHECK(s.Q.plus.size() == np);
        CHECK(s.Q.minus.size() == nm);
        CHECK(s.Q.tilde_plus.size() == ntp);
        CHECK(s.Q.tilde_minus.size() == ntm);
    }
}

TEST_CASE("case selection and next sites") {
    auto m = qptest::model(2, 1e-3, 0.0, 0.3);
    auto ctx = make_context(m, qptest::desk_scale(1e-2), 50, 2);
    ScaleState st;
    st.s = 0;
    st.parity = 0;

    auto sel = select_case(st, 2, ctx);
    CHECK(sel.tag == CaseTag::C1);
    CHECK(sel.shift == P2(0, 0));
    CHECK(std::isinf(sel.dist_tilde_minus_plus));

    st.Q.plus = {{P2(0, 0), 0.0}};
    st.Q.tilde_minus = {{P2(3, 0), 0.0}, {P2(40, 40), 0.0}};
    st.Q.minus = {{P2(3, 0), 0.0}};
    sel = select_case(st, 3, ctx);  // threshold 3^1.3 > 3
    CHECK(sel.tag == CaseTag::C2);
    CHECK(sel.shift == P2(-3, 0));  // i - j
    CHECK(sel.dist_tilde_minus_plus == 3.0);
    CHECK(select_case(st, 2, ctx).tag == CaseTag::C1);  // threshold 2^1.3 < 3

    // tie-break: equal distances, lexicographically smallest pair wins
    st.Q.plus = {{P2(0, 0), 0.0}, {P2(10, 0), 0.0}};
    st.Q.tilde_minus = {{P2(0, 2), 0.0}, {P2(2, 0), 0.0}, {P2(12, 0), 0.0}};
    sel = select_case(st, 3, ctx);
    REQUIRE(sel.pair);
    CHECK(sel.pair->first == P2(0, 0));
    CHECK(sel.pair->second == P2(0, 2));

    auto [same, par] = build_next_sites(st, CaseSelection{});
    CHECK(par == 0u);
    CHECK(same == st.Q.resonant());

    ScaleState one;
    one.Q.minus = {{P2(4, 4), 0.0}};
    one.Q.plus = {{P2(5, 4), 0.0}};
    CaseSelection c2;
    c2.tag = CaseTag::C2;
    c2.shift = P2(1, 0);
    auto [mid, mpar] = build_next_sites(one, c2);
    REQUIRE(mid.size() == 1);
    CHECK(mid[0].doubled(0) == 9);
    CHECK(mid[0].doubled(1) == 8);
    CHECK(mpar == 1u);
}

TEST_CASE("block construction") {
    auto m = qptest::model(1, 1e-3, 0.0, 0.3);
    auto sp = qptest::desk_scale(1e-2);
    sp.c = 1.5;
    auto ctx = make_context(m, sp, 400, 2);

    ScaleState s0;
    s0.s = 0;
    s0.N = 0;
    std::vector<ScaleState> h{s0};
    CaseSelection c1;
    c1.shift = P1(0);
    auto b1 = build_blocks(h, {P1(5)}, c1, 4, ctx);
    CHECK(b1.omega == Region::cube(1, 4, P1(0)));
    CHECK(b1.omega_tilde == Region::cube(1, 8, P1(0)));
    CHECK(b1.A == Region::from_points(1, {P1(0)}));

    // One stage-1 site at distance 9: its radius-2 cube touches Lambda_8 and is absorbed (with its mirror).
    ScaleState s1;
    s1.s = 1;
    s1.N = 1;
    s1.P = {P1(0), P1(9)};
    s1.blocks = BlockTemplate{Region::cube(1, 1, P1(0)), Region::cube(1, 1, P1(0)), Region::from_points(1, {P1(0)})};
    h = {s0, s1};
    auto b2 = build_blocks(h, {P1(0)}, c1, 4, ctx);
    CHECK(b2.omega_tilde == Region::cube(1, 11, P1(0)));
    CHECK(b2.omega == Region::cube(1, 4, P1(0)));

    // A chain of touching cubes runs past the collar.
    s1.P.clear();
    for (int k = 0; k <= 400; k += 4) s1.P.push_back(P1(k));
    h = {s0, s1};
    CHECK(code_of([&] { build_blocks(h, {P1(0)}, c1, 4, ctx); }) == "closure-overflow");

    // C2: A doubles into the mirror pair.
    CaseSelection c2;
    c2.tag = CaseTag::C2;
    c2.shift = P1(3);
    h = {s0};
    auto b3 = build_blocks(h, {HalfLatticePoint::from_doubled({3})}, c2, 2, ctx);
    CHECK(b3.A.size() == 2);
    CHECK(b3.A.contains(HalfLatticePoint::from_doubled({3})));
    CHECK(b3.A.contains(HalfLatticePoint::from_doubled({-3})));
    CHECK(b3.omega_tilde.symmetric_about(HalfLatticePoint::origin(1)));
}

TEST_CASE("root tracking in the weak-coupling limit") {
    auto ctx = qptest::desk_context(1, -0.5, 1000, 1, 1e-3);
    ctx.model.eps = 1e-12;
    auto h = run_msa(ctx, 1);
    REQUIRE(h[0].selection->tag == CaseTag::C1);
    CHECK(std::abs(h[1].theta - h[0].theta) < 1e-14);
}

TEST_CASE("stage-1 root tracking against a bisection oracle") {
    auto ctx = qptest::desk_context(1, -0.5, 1000, 1, 1e-3);
    auto h = run_msa(ctx, 1);
    REQUIRE(h[0].selection->tag == CaseTag::C1);
    const auto& r = *h[1].root;
    CHECK(std::abs(h[1].theta - h[0].theta) < ctx.model.eps);
    const double t0 = h[0].theta.real();
    const double oracle = qptest::bisect(h[1].blocks->omega_tilde, ctx.model, t0 - 0.5 * r.radius, t0 + 0.5 * r.radius);
    CHECK(std::abs(h[1].theta.real() - oracle) < 1e-10);
    CHECK(std::abs(h[1].theta.imag()) < 1e-10);
    CHECK(r.asymmetry < 1e-10);

    // Constructed C2: 2 theta_0 + omega = 4e-4.
    const double w = qptest::golden();
    auto ctx2 = qptest::desk_context(1, std::cos(2 * M_PI * (0.5 * w + 2e-4)), 1000, 1, 1e-3);
    auto g = run_msa(ctx2, 1);
    REQUIRE(g[0].selection->tag == CaseTag::C2);
    const auto& r2 = *g[1].root;
    CHECK(r2.count == 2);
    REQUIRE(r2.z_next);
    CHECK(torus_norm(g[1].theta - *r2.z_next) < std::sqrt(ctx2.model.eps));
    CHECK(r2.asymmetry < 1e-10);
}

TEST_CASE("good sets and enlargement") {
    auto ctx = qptest::desk_context(1, -0.5, 1000, 2, 1e-3);
    auto h = run_msa(ctx, 1);
    const auto& st = h[1];
    REQUIRE(st.P.size() >= 2);

    // Away from every block.
    HalfLatticePoint far = P1(0);
    for (long x = -600; x <= 600; x += 7) {
        bool clear = true;
        for (const auto& k : st.P) clear = clear && std::abs(k.coord(0) - x) > 20;
        for (const auto& k : h[0].Q.resonant()) clear = clear && std::abs(k.coord(0) - x) > 20;
        if (clear) {
            far = P1(x);
            break;
        }
    }
    Region quiet = Region::cube(1, 5, far);
    CHECK(verify_good_set(quiet, h, ctx).is_good);
    CHECK(enlarge_region(quiet, h, ctx) == quiet);

    // A non-resonant stage-1 block cut by the region edge.
    HalfLatticePoint k = st.P.front();
    for (const auto& p : st.P)
        if (p.norm() < 800 && !(p == HalfLatticePoint::origin(1))) k = p;
    const Region clipped = Region::box({static_cast<std::int64_t>(k.coord(0)) - 10},
                                       {static_cast<std::int64_t>(k.coord(0))});
    auto g = verify_good_set(clipped, h, ctx);
    CHECK_FALSE(g.is_good);
    CHECK(g.clause == 1);
    CHECK(g.block_centre == k);
    const Region big = enlarge_region(clipped, h, ctx);
    CHECK(big == clipped.united(st.omega_tilde(k)));
    CHECK(verify_good_set(big, h, ctx).is_good);

    // The planted site is resonant at stage 1: any region holding its block is not 1-good.
    const Region origin_block = Region::cube(1, 6, P1(0));
    auto bad = verify_good_set(origin_block, h, ctx);
    CHECK_FALSE(bad.is_good);
    CHECK(bad.clause == 2);

    CHECK(code_of([&] { verify_good_set(Region::cube(1, 5, P1(998)), h, ctx); }) == "window-insufficient");
    CHECK(code_of([&] { enlarge_region(Region::cube(1, 2, P1(0)), h, ctx); }) == "");
}

TEST_CASE("bounds at stage zero agree with the Neumann certificate") {
    std::mt19937_64 rng(3);
    auto p = qptest::sample_zero_good(rng, 1e-4, 30);
    REQUIRE(p);
    auto sp = qptest::desk_scale(std::pow(1e-4, 0.1));
    auto ctx = make_context(*p, sp, 200, 1);
    std::vector<ScaleState> h{init_stage0(ctx)};
    const Region box = Region::box({0}, {29});
    REQUIRE(verify_good_set(box, h, ctx).is_good);
    auto b = check_bounds(box, h, ctx);
    auto cert = neumann_certificate(assemble_T(box, *p), std::pow(1e-4, 0.1), true);
    CHECK(b.norm == doctest::Approx(cert.norm).epsilon(1e-12));
    CHECK(b.norm_bound == doctest::Approx(cert.norm_bound).epsilon(1e-12));
    CHECK(b.decay_rate == doctest::Approx(cert.gamma0));
    CHECK(b.pass);
}

TEST_CASE("desk runs satisfy every invariant") {
    struct Run {
        int d;
        double E;
        long W;
        double delta0;
    };
    const double w = qptest::golden();
    for (Run r : {Run{1, -0.5, 1000, 1e-3}, Run{1, std::cos(2 * M_PI * (0.5 * w + 2e-4)), 1000, 1e-3},
                  Run{2, -0.5, 100, 1e-5}}) {
        CAPTURE(r.d);
        CAPTURE(r.E);
        auto ctx = qptest::desk_context(r.d, r.E, r.W, 2, r.delta0);
        auto h = run_msa(ctx, 2);
        for (const auto& inv : check_invariants(h, ctx)) {
            CAPTURE(inv.name);
            CAPTURE(inv.detail);
            CHECK(inv.pass);
        }
        std::vector<ScaleState> h1(h.begin(), h.begin() + 2);
        auto samples = sample_bound_checks(h1, ctx, 4, 9);
        CHECK(samples.size() == 4);
        for (const auto& sb : samples) CHECK(sb.report.pass);
        auto band = stage1_determinant_band(h, ctx, 20);
        CHECK(band.min_ratio > 0);
        CHECK(std::isfinite(band.max_ratio));

        auto again = run_msa(ctx, 2);
        for (std::size_t s = 0; s < h.size(); ++s) {
            CHECK(again[s].theta == h[s].theta);
            CHECK(again[s].P == h[s].P);
        }
    }
}
