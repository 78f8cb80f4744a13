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

#include <cmath>
#include <optional>
#include <random>

#include <Eigen/LU>

#include "qp/green.hpp"
#include "qp/msa.hpp"
#include "qp/operator.hpp"

namespace qptest {

inline double golden() { return (std::sqrt(5.0) - 1.0) / 2.0; }

inline qp::ModelParams model(int d, double eps, double theta, double E) {
    qp::ModelParams p;
    p.d = d;
    p.eps = eps;
    p.omega = d == 1 ? std::vector<double>{golden()} : std::vector<double>{golden(), std::sqrt(2.0) - 1.0};
    p.theta = theta;
    p.energy = E;
    return p;
}

/// Rejection-samples (theta, E) until [0, length) is 0-good for the slow frequency golden/1000.
inline std::optional<qp::ModelParams> sample_zero_good(std::mt19937_64& rng, double eps, int length,
                                                       int max_tries = 200000) {
    std::uniform_real_distribution<double> ut(0.0, 1.0), ue(-2.0, 2.0);
    const double delta0 = std::pow(eps, 0.1);
    qp::Region box = qp::Region::box({0}, {length - 1});
    for (int t = 0; t < max_tries; ++t) {
        qp::ModelParams p = model(1, eps, ut(rng), ue(rng));
        p.omega = {golden() / 1000.0};
        if (qp::check_zero_good(box, p, qp::base_phase(p.energy), delta0).is_good) return p;
    }
    return std::nullopt;
}

/// Practical-mode knobs used for desk-scale multi-scale runs.
inline qp::ScaleParams desk_scale(double delta0) {
    qp::ScaleParams sp;
    sp.mode = qp::ScheduleMode::practical;
    sp.c = 1.3;
    sp.kappa = 3.0;
    sp.rho = 2.0;
    sp.n1 = 2;
    sp.delta0 = delta0;
    sp.tilde_exponent = 0.5;
    sp.case_factor = 1.0;
    return sp;
}

/// eps = 1e-4 model with theta planted on the stage-1 phase.
inline qp::MsaContext desk_context(int d, double E, long window, int s_max, double delta0) {
    qp::ModelParams m = model(d, 1e-4, 0.1, E);
    auto ctx = qp::make_context(m, desk_scale(delta0), window, s_max);
    return qp::make_context(qp::plant_stage1_resonance(ctx), desk_scale(delta0), window, s_max);
}

/// Determinant of the block operator at real phase z, assembled without library helpers.
inline double block_det(const qp::Region& tmpl, const qp::ModelParams& m, double z) {
    const auto n = static_cast<Eigen::Index>(tmpl.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double ph = z;
        for (int a = 0; a < m.d; ++a) ph += tmpl[i].coord(a) * m.omega[a];
        M(i, i) = std::cos(2 * M_PI * ph) - m.energy;
        for (Eigen::Index j = 0; j < n; ++j)
            if (qp::l1_distance(tmpl[i], tmpl[j]) == 1.0) M(i, j) = m.eps;
    }
    return Eigen::FullPivLU<Eigen::MatrixXd>(M).determinant();
}

inline double bisect(const qp::Region& tmpl, const qp::ModelParams& m, double a, double b) {
    double fa = block_det(tmpl, m, a);
    for (int it = 0; it < 200 && b - a > 1e-16; ++it) {
        const double c = 0.5 * (a + b), fc = block_det(tmpl, m, c);
        if ((fc < 0) == (fa < 0)) {
            a = c;
            fa = fc;
        } else {
            b = c;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace qptest
