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

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qp/operator.hpp"

namespace qp {

struct CountResult {
    std::size_t count = 0;
    /// Nonzero when the shift hit a (numerically) singular pivot and was moved.
    double jitter = 0.0;
};

/// Number of eigenvalues <= E from the inertia of H - E (Bunch-Kaufman LDL^T).
CountResult count_leq(const Eigen::MatrixXd& H, double E);
/// Same on banded storage, unpivoted LDL^T (Sturm count when bandwidth is 1).
CountResult count_leq(const BandedSymmetric& H, double E);
/// Number of eigenvalues >= E.
CountResult count_geq(const BandedSymmetric& H, double E);

/// Hamiltonian (E = 0) on Lambda_N(0) in banded storage.
BandedSymmetric window_hamiltonian(int N, const ModelParams& params);

struct WindowCount {
    std::size_t count = 0;
    double density = 0.0;
    std::size_t sites = 0;
};

WindowCount ids_window(int N, const ModelParams& params, double E, double eta);
WindowCount ids_window(const BandedSymmetric& H, double E, double eta);

struct IdsScan {
    int N = 100;
    int d = 1;
    double eps = 1e-3;
    std::vector<double> omega;
    std::vector<double> thetas;
    std::vector<double> energies;
    std::vector<double> etas;
    double mu = 0.1;
    int threads = 1;
};

struct IdsCell {
    double theta = 0.0, energy = 0.0, eta = 0.0;
    std::size_t count = 0;
    double density = 0.0;
    double bound = 0.0;
    bool pass = true;
};

struct IdsReport {
    std::vector<IdsCell> cells;  // theta-major, then energy, then eta
    std::size_t sites = 0;
    /// Per energy: fitted slope of log(max_theta density) against log eta; +inf when undetermined.
    std::vector<double> fitted_exponent;
    double min_exponent = 0.0;
    double min_exponent_energy = 0.0;
    /// Cell with the largest density / eta^(1/2 - mu).
    IdsCell worst;
    double worst_ratio = 0.0;
    bool all_pass = true;
    std::size_t jittered = 0;
};

/// Sorted, deduplicated copy; sets changed when the input was not already normalised.
std::vector<double> normalize_etas(const std::vector<double>& etas, bool* changed = nullptr);

/// Least-squares slope of log y against log x over points with y > 0; +inf if fewer than two.
double fit_log_slope(const std::vector<double>& x, const std::vector<double>& y);

IdsReport holder_scan(const IdsScan& scan);

/// Stratified sample: (i + 1/2)/n for i < n.
std::vector<double> stratified_thetas(int n);

}  // namespace qp
