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
#include "qp/localization.hpp"
#include "support.hpp"

using namespace qp;

namespace {

Eigen::MatrixXd hamiltonian(const Region& r, ModelParams p) {
    p.energy = 0.0;
    return assemble_dense(r, p);
}

}  // namespace

TEST_CASE("zero coupling gives coordinate eigenvectors") {
    auto p = qptest::model(1, 0.0, 0.2, 0.0);
    Region box = Region::box({-5}, {5});
    auto set = eigensolve(hamiltonian(box, p), box);
    std::vector<double> expect;
    for (const auto& n : box) expect.push_back(std::cos(2 * M_PI * orbit_phase(p, n)));
    std::sort(expect.begin(), expect.end());
    for (Eigen::Index j = 0; j < set.eigenvalues.size(); ++j) {
        CHECK(set.eigenvalues(j) == doctest::Approx(expect[j]).epsilon(1e-14));
        Eigen::Index i;
        CHECK(set.eigenvectors.col(j).cwiseAbs().maxCoeff(&i) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(set.eigenvectors(i, j) > 0);
    }
}

TEST_CASE("two-site example") {
    // diag (1, -1), coupling 0.5: eigenvalues +-sqrt(1.25)
    Eigen::MatrixXd H(2, 2);
    H << 1.0, 0.5, 0.5, -1.0;
    Region r = Region::box({0}, {1});
    auto set = eigensolve(H, r);
    CHECK(set.eigenvalues(0) == doctest::Approx(-std::sqrt(1.25)));
    CHECK(set.eigenvalues(1) == doctest::Approx(std::sqrt(1.25)));
    CHECK(max_relative_residual(set, H) < 1e-15);
    CHECK_THROWS_AS(eigensolve(H, r, 1), Error);
}

TEST_CASE("residuals and orthonormality on a long chain") {
    auto p = qptest::model(1, 1e-2, 0.3, 0.0);
    Region box = Region::cube(1, 500, HalfLatticePoint::origin(1));
    Eigen::MatrixXd H = hamiltonian(box, p);
    auto set = eigensolve(H, box);
    CHECK(max_relative_residual(set, H) < 1e-12);
    Eigen::MatrixXd G = set.eigenvectors.transpose() * set.eigenvectors;
    CHECK((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() < 1e-12);
    refine_tridiagonal(set, assemble_banded(box, [&] { auto q = p; q.energy = 0; return q; }()));
    CHECK(max_relative_residual(set, H) < 1e-12);
    for (double f : set.resolution_floor) CHECK(f == 0.0);
}

TEST_CASE("decay fit edge cases") {
    Region box = Region::box({0}, {20});
    const double sentinel = max_rate_sentinel(1e-4);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(21);
    delta(10) = 1.0;
    auto f = fit_eigenvector_decay(delta, box, sentinel);
    CHECK(f.rate == sentinel);
    CHECK(f.center == HalfLatticePoint::integer({10}));

    Eigen::VectorXd flat = Eigen::VectorXd::Constant(21, 1.0 / std::sqrt(21.0));
    auto g = fit_eigenvector_decay(flat, box, sentinel);
    // (log 21 - log(21^{-1/2})) / 20
    CHECK(g.rate == doctest::Approx(1.5 * std::log(21.0) / 20.0));

    Eigen::VectorXd expo(21);
    for (int i = 0; i < 21; ++i) expo(i) = std::exp(-0.7 * std::abs(i - 10));
    auto h = fit_eigenvector_decay(expo, box, sentinel);
    // 0.7 + log 21 / r, smallest at the far end r = 10
    CHECK(h.rate == doctest::Approx(0.7 + std::log(21.0) / 10.0));

    CHECK_THROWS_AS(fit_eigenvector_decay(flat, Region::box({0}, {3}), sentinel), Error);
}

TEST_CASE("decay fit is invariant under sign flip and reflection") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    Region box = Region::cube(1, 15, HalfLatticePoint::origin(1));
    for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd v(box.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng) * std::exp(-0.5 * std::abs(i - 12.0));
        auto a = fit_eigenvector_decay(v, box, 50.0);
        auto b = fit_eigenvector_decay(-v, box, 50.0);
        auto c = fit_eigenvector_decay(v.reverse(), box, 50.0);
        CHECK(a.rate == b.rate);
        CHECK(a.rate == doctest::Approx(c.rate).epsilon(1e-15));
        CHECK(c.center == -a.center);
    }
}

TEST_CASE("reflection symmetry of the spectrum under theta -> -theta") {
    auto p = qptest::model(2, 1e-2, 0.17, 0.0);
    Region box = Region::cube(2, 6, HalfLatticePoint::origin(2));
    auto q = p;
    q.theta = -p.theta;
    auto a = eigensolve(hamiltonian(box, p), box);
    auto b = eigensolve(hamiltonian(box, q), box);
    CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() < 1e-13);
    set_dense_resolution_floor(a);
    for (double f : a.resolution_floor) CHECK(f > 0.0);
}

TEST_CASE("eigenvector entries square-sum to one per site") {
    auto p = qptest::model(1, 0.05, 0.41, 0.0);
    Region box = Region::cube(1, 40, HalfLatticePoint::origin(1));
    auto set = eigensolve(hamiltonian(box, p), box);
    Eigen::VectorXd rows = set.eigenvectors.rowwise().squaredNorm();
    CHECK((rows.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("localization report") {
    auto p = qptest::model(1, 1e-4, 0.236785, 0.0);
    LocalizationOptions opt;
    opt.N = 100;
    auto rep = localization_report(p, opt);
    CHECK(rep.threshold == doctest::Approx(std::abs(std::log(1e-4)) / 24.0));
    CHECK(rep.vectors.size() == 201);
    CHECK(rep.max_residual < 1e-12);
    CHECK(rep.interior <= rep.vectors.size());
    CHECK(rep.pass_fraction > 0.9);
    std::size_t total = 0;
    for (auto c : rep.histogram) total += c;
    CHECK(total == rep.vectors.size());
    CHECK(rep.phase_condition == rep.phase_violations.empty());
    for (const auto& r : rep.vectors) CHECK(r.boundary == (100 - r.center.norm() < 10.0));
}
