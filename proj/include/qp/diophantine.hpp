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

#include <vector>

#include "qp/lattice.hpp"

namespace qp {

/// Outcome of an exhaustive check of ||n.omega|| >= gamma exp(-||n||^tau).
struct FrequencyCheck {
    bool pass = false;
    HalfLatticePoint worst_n;
    /// min over the ball of ||n.omega|| exp(||n||^tau): the largest admissible gamma.
    double worst_value = 0.0;
    /// worst_value - gamma.
    double margin = 0.0;
    double radius = 0.0;
};

/// Frequency class with the radius up to which membership was checked.
struct FrequencyClass {
    std::vector<double> omega;
    double tau = 0.5;
    double gamma = 0.0;
    double verified_radius = 0.0;
};

FrequencyCheck verify_frequency(const std::vector<double>& omega, double gamma, double tau, int radius);

/// Largest gamma that passes at the given radius (the worst_value of the scan).
FrequencyClass certify_frequency(const std::vector<double>& omega, double tau, int radius, double safety = 0.999);

struct PhaseCheck {
    bool pass = true;
    /// n with R_min <= ||n|| <= R_max and ||2 theta + n.omega|| <= exp(-||n||^tau1).
    std::vector<HalfLatticePoint> violations;
};

PhaseCheck verify_phase_condition(double theta, const std::vector<double>& omega, double tau1, int r_min, int r_max);

/// Integer points with 0 < ||n|| <= R (or R_min <= ||n|| <= R_max), lexicographic order.
std::vector<HalfLatticePoint> lattice_shell(int d, int r_min, int r_max);

/// Default test frequencies: golden mean, sqrt(2)-1, then further quadratic irrationals.
std::vector<double> default_frequency(int d);

}  // namespace qp
