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
#include <complex>
#include <numbers>
#include <random>

#include "qp/lattice.hpp"
#include "qp/operator.hpp"
#include "qp/torus.hpp"
#include "qp/error.hpp"

using namespace qp;

TEST_CASE("torus norm") {
    CHECK(torus_norm(0.5) == doctest::Approx(0.5));
    CHECK(torus_norm(1.25) == doctest::Approx(0.25));
    CHECK(torus_norm(std::complex<double>(0.75, 0.1)) == doctest::Approx(0.269258).epsilon(1e-6));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 200; ++i) {
        double a = u(rng);
        int m = static_cast<int>(u(rng) * 10);
        CHECK(torus_norm(a + m) == doctest::Approx(torus_norm(a)).epsilon(1e-12));
        CHECK(torus_norm(-a) == doctest::Approx(torus_norm(a)).epsilon(1e-12));
        std::complex<double> z(a, u(rng));
        CHECK(torus_norm(-z) == doctest::Approx(torus_norm(z)).epsilon(1e-12));
    }
}

TEST_CASE("half lattice arithmetic") {
    auto a = HalfLatticePoint::from_doubled({1, 4});
    auto b = HalfLatticePoint::from_doubled({3, -2});
    CHECK_FALSE(a.is_integer());
    CHECK((a + b).is_integer());
    CHECK((a + b) == HalfLatticePoint::integer({2, 1}));
    CHECK((-a) == HalfLatticePoint::from_doubled({-1, -4}));
    auto m = HalfLatticePoint::midpoint(a, b);
    REQUIRE(m.has_value());
    CHECK(*m == HalfLatticePoint::from_doubled({2, 1}));
    CHECK_FALSE(HalfLatticePoint::midpoint(a, HalfLatticePoint::integer({0, 0})).has_value());
    CHECK(HalfLatticePoint::integer({3}).half() == HalfLatticePoint::from_doubled({3}));
    CHECK(sup_distance(a, b) == doctest::Approx(3.0));
    CHECK(l1_distance(a, b) == doctest::Approx(4.0));
}

TEST_CASE("region geometry") {
    auto c = Region::cube(2, 1.0, HalfLatticePoint::origin(2));
    CHECK(c.size() == 9);
    CHECK(c.diam() == doctest::Approx(2.0));
    CHECK(c.symmetric_about(HalfLatticePoint::origin(2)));
    // half-integer centre on Z^1
    auto h = Region::cube(1, 1.0, HalfLatticePoint::from_doubled({1}));
    CHECK(h.size() == 2);
    CHECK(h.symmetric_about(HalfLatticePoint::from_doubled({1})));
    // half-integer coset, centre 0
    auto hh = Region::cube(1, 1.5, HalfLatticePoint::origin(1), 1u);
    CHECK(hh.size() == 4);
    CHECK(hh.symmetric_about(HalfLatticePoint::origin(1)));
    CHECK_THROWS_AS(Region(1, 0u, {HalfLatticePoint::from_doubled({1})}), Error);
    auto far = c.translated(HalfLatticePoint::integer({5, 0}));
    CHECK(dist(c, far) == doctest::Approx(3.0));
    CHECK(c.united(far).size() == 18);
    CHECK(c.intersected(far).empty());
}

TEST_CASE("boundary examples") {
    auto one = Region::cube(1, 0, HalfLatticePoint::origin(1));
    CHECK(boundary(one, one).pairs.empty());
    auto outer = Region::cube(1, 1, HalfLatticePoint::origin(1));
    auto b = boundary(one, outer);
    REQUIRE(b.pairs.size() == 2);
    CHECK(b.pairs[0].second == HalfLatticePoint::integer({-1}));
    CHECK(b.pairs[1].second == HalfLatticePoint::integer({1}));
    CHECK_THROWS_AS(boundary(outer, one), Error);

    auto in2 = Region::cube(2, 1, HalfLatticePoint::origin(2));
    auto out2 = Region::cube(2, 2, HalfLatticePoint::origin(2));
    auto b2 = boundary(in2, out2);
    // Oracle: brute force dist(n, outer \ inner) == 1.
    auto rest = out2.minus(in2);
    std::vector<HalfLatticePoint> expect;
    for (const auto& n : in2)
        if (dist(n, rest) == 1.0) expect.push_back(n);
    CHECK(expect.size() == 8);
    CHECK(b2.inner_side == expect);
    CHECK(b2.outer_side.size() == 16);
}

namespace {
ModelParams sample_params(int d, double eps, double theta, double E) {
    ModelParams p;
    p.d = d;
    p.eps = eps;
    p.omega = d == 1 ? std::vector<double>{0.6180339887498949} : std::vector<double>{0.6180339887498949, 0.41421356237309503};
    p.theta = theta;
    p.energy = E;
    return p;
}
}  // namespace

TEST_CASE("assemble_T examples") {
    CHECK_THROWS_AS(assemble_T(Region(1, 0u), sample_params(1, 0.1, 0, 0)), Error);
    auto single = assemble_T(Region::cube(1, 0, HalfLatticePoint::origin(1)), sample_params(1, 0.1, 0.0, 0.0));
    REQUIRE(single.dense);
    CHECK((*single.dense)(0, 0) == doctest::Approx(1.0));

    auto p = sample_params(2, 0.01, 0.3, 0.2);
    auto T = assemble_T(Region::cube(2, 1, HalfLatticePoint::origin(2)), p);
    const auto& M = *T.dense;
    int pairs = 0;
    for (int i = 0; i < 9; ++i)
        for (int j = i + 1; j < 9; ++j) {
            CHECK(M(i, j) == M(j, i));
            if (M(i, j) != 0.0) {
                ++pairs;
                CHECK(M(i, j) == 0.01);
            }
        }
    CHECK(pairs == 12);
    for (int i = 0; i < 9; ++i)
        CHECK(M(i, i) == doctest::Approx(std::cos(2 * std::numbers::pi * (0.3 + T.region[i].dot(p.omega))) - 0.2).epsilon(1e-15));

    auto p0 = sample_params(1, 0.0, 0.17, -0.3);
    auto D = assemble_T(Region::cube(1, 5, HalfLatticePoint::origin(1)), p0);
    CHECK((D.dense->diagonal().asDiagonal().toDenseMatrix() - *D.dense).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dense and banded paths agree") {
    auto p = sample_params(2, 0.05, 0.123, 0.4);
    auto r = Region::cube(2, 6, HalfLatticePoint::origin(2));
    Eigen::MatrixXd a = assemble_dense(r, p);
    Eigen::MatrixXd b = assemble_banded(r, p).to_dense();
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10 * a.cwiseAbs().maxCoeff());
    auto big = assemble_T(Region::cube(1, 2100, HalfLatticePoint::origin(1)), sample_params(1, 0.1, 0, 0));
    CHECK(big.banded.has_value());
    CHECK(big.banded->bandwidth() == 1);
}

TEST_CASE("spectrum containment") {
    for (int d = 1; d <= 2; ++d) {
        double eps = 0.2;
        auto p = sample_params(d, eps, 0.377, 0.0);
        auto T = assemble_T(Region::cube(d, d == 1 ? 40 : 8, HalfLatticePoint::origin(d)), p);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*T.dense);
        CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= 1 + 2 * d * eps + 1e-12);
    }
}

TEST_CASE("complexified_T") {
    auto p = sample_params(1, 0.03, 0.21, 0.1);
    auto r = Region::cube(1, 4, HalfLatticePoint::origin(1));
    auto k = HalfLatticePoint::integer({7});
    Eigen::MatrixXcd M = complexified_T(r, p, p.theta + k.dot(p.omega));
    Eigen::MatrixXd T = assemble_dense(r.translated(k), p);
    CHECK((M.real() - T).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(M.imag().cwiseAbs().maxCoeff() < 1e-12);

    auto p0 = p;
    p0.eps = 0.0;
    std::complex<double> z(0.13, 0.2);
    auto half = Region::cube(1, 2.5, HalfLatticePoint::origin(1), 1u);
    std::complex<double> prod = 1.0;
    for (const auto& n : half) prod *= std::cos(2 * std::numbers::pi * (z + n.dot(p.omega))) - p.energy;
    auto ld = log_determinant(complexified_T(half, p0, z));
    CHECK(std::abs(ld.value() - prod) <= 1e-12 * std::abs(prod));
}

TEST_CASE("evenness of symmetric block determinants") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (unsigned parity : {0u, 1u, 3u}) {
        int d = parity == 3u ? 2 : 1;
        auto p = sample_params(d, 0.07, 0.0, 0.35);
        auto r = Region::cube(d, d == 1 ? 6.5 : 3.5, HalfLatticePoint::origin(d), parity);
        REQUIRE(r.symmetric_about(HalfLatticePoint::origin(d)));
        for (int t = 0; t < 100; ++t) {
            std::complex<double> z(u(rng), u(rng));
            auto a = log_determinant(complexified_T(r, p, z));
            auto b = log_determinant(complexified_T(r, p, -z));
            double mag = std::exp(a.log_abs);
            double diff = std::abs(1.0 - b.ratio(a)) * mag;
            CHECK(diff <= 1e-10 * std::max(1.0, mag));
        }
    }
}

TEST_CASE("log determinant matches direct determinant") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(12, 12);
    auto ld = log_determinant(m);
    CHECK(std::abs(ld.value() - m.determinant()) <= 1e-10 * std::abs(m.determinant()));
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 3);
    CHECK(log_determinant(z).zero);
}
