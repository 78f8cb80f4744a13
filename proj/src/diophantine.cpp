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
#include "qp/diophantine.hpp"

#include <cmath>
#include <limits>

#include "qp/error.hpp"
#include "qp/torus.hpp"

namespace qp {

std::vector<HalfLatticePoint> lattice_shell(int d, int r_min, int r_max) {
    std::vector<HalfLatticePoint> out;
    if (r_max < r_min || r_max < 0) return out;
    std::vector<std::int64_t> lo(d, -r_max), hi(d, r_max);
    Region ball = Region::box(lo, hi);
    for (const auto& p : ball) {
        double r = p.norm();
        if (r >= r_min && r > 0) out.push_back(p);
    }
    return out;
}

namespace {

// Calls f(n, ||n||) for every integer n with r_min <= ||n|| <= r_max, n != 0,
// without materialising the ball.
template <class F>
void for_each_shell_point(int d, int r_min, int r_max, F&& f) {
    std::vector<std::int64_t> x(d, -r_max);
    if (r_max < 1) return;
    while (true) {
        std::int64_t m = 0;
        for (auto v : x) m = std::max<std::int64_t>(m, std::llabs(v));
        if (m >= r_min && m > 0) f(HalfLatticePoint::integer(x), static_cast<double>(m));
        int i = d - 1;
        for (; i >= 0; --i) {
            if (x[i] < r_max) {
                ++x[i];
                break;
            }
            x[i] = -r_max;
        }
        if (i < 0) break;
    }
}

}  // namespace

FrequencyCheck verify_frequency(const std::vector<double>& omega, double gamma, double tau, int radius) {
    if (radius < 1) throw Error("bad-radius", "verify_frequency needs R >= 1");
    const int d = static_cast<int>(omega.size());
    FrequencyCheck out;
    out.radius = radius;
    out.worst_value = std::numeric_limits<double>::infinity();
    out.worst_n = HalfLatticePoint(d);
    double worst_r = 0.0;
    for_each_shell_point(d, 1, radius, [&](const HalfLatticePoint& n, double r) {
        // n and -n give the same value; keep the one whose first nonzero coordinate is positive.
        for (int i = 0; i < d; ++i) {
            if (n.doubled(i) < 0) return;
            if (n.doubled(i) > 0) break;
        }
        double v = torus_norm(n.dot(omega)) * std::exp(std::pow(r, tau));
        if (v < out.worst_value || (v == out.worst_value && r < worst_r)) {
            worst_r = r;
            out.worst_value = v;
            out.worst_n = n;
        }
    });
    out.margin = out.worst_value - gamma;
    out.pass = out.worst_value >= gamma;
    return out;
}

FrequencyClass certify_frequency(const std::vector<double>& omega, double tau, int radius, double safety) {
    auto chk = verify_frequency(omega, 0.0, tau, radius);
    return FrequencyClass{omega, tau, chk.worst_value * safety, static_cast<double>(radius)};
}

PhaseCheck verify_phase_condition(double theta, const std::vector<double>& omega, double tau1, int r_min, int r_max) {
    if (!(tau1 > 0.0 && tau1 < 1.0)) throw Error("bad-exponent", "phase condition exponent must lie in (0,1)");
    PhaseCheck out;
    const int d = static_cast<int>(omega.size());
    for_each_shell_point(d, std::max(r_min, 1), r_max, [&](const HalfLatticePoint& n, double r) {
        if (torus_norm(2.0 * theta + n.dot(omega)) <= std::exp(-std::pow(r, tau1))) out.violations.push_back(n);
    });
    out.pass = out.violations.empty();
    return out;
}

std::vector<double> default_frequency(int d) {
    static const double table[] = {(std::sqrt(5.0) - 1.0) / 2.0, std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0,
                                   (std::sqrt(13.0) - 3.0) / 2.0};
    if (d < 1 || d > 4) throw Error("bad-dimension", "no default frequency for this dimension");
    return std::vector<double>(table, table + d);
}

}  // namespace qp
