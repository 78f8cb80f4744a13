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
#include <vector>

#include <Eigen/Dense>

#include "qp/diophantine.hpp"
#include "qp/lattice.hpp"
#include "qp/operator.hpp"

namespace qp {

struct EigenpairSet {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // unit columns
    Region region;
    /// Per-vector magnitude below which entries are not resolved (0 when entrywise accurate).
    std::vector<double> resolution_floor;
    double norm = 0.0;  // ||H||
};

/// Full dense eigendecomposition; first entry above 1e-8 max|v| made positive.
EigenpairSet eigensolve(const Eigen::MatrixXd& H, const Region& region, std::size_t dense_limit = kDenseLimit);

/// Dense-path resolution floor 16 eps_mach ||H|| / gap_i.
void set_dense_resolution_floor(EigenpairSet& set);

/// Replace eigenvectors of a tridiagonal H by twisted-factorisation vectors (entrywise accurate).
void refine_tridiagonal(EigenpairSet& set, const BandedSymmetric& H);

/// Max over pairs of ||H v - lambda v|| / ||H||.
double max_relative_residual(const EigenpairSet& set, const Eigen::MatrixXd& H);

struct EigenvectorDecay {
    HalfLatticePoint center;
    double rate = 0.0;
    double prefactor_log = 0.0;
    std::size_t used = 0;
};

/// rate = min over ||n - c|| >= r_min of (prefactor_log - log|v(n)|)/||n - c||, prefactor_log = log #Lambda.
/// Entries with |v(n)| <= floor are skipped; exact zeros give max_rate.
EigenvectorDecay fit_eigenvector_decay(const Eigen::VectorXd& v, const Region& region, double max_rate,
                                       double r_min = 5.0, double floor = 0.0);

struct LocalizationOptions {
    int N = 100;
    double tau1 = 0.3;
    int phase_r_min = 5;
    int phase_r_max = 1000;
    double r_min = 5.0;
    /// Default: |log eps| / 24.
    double threshold = -1.0;
    double boundary_fraction = 0.1;
    /// Keep (distance, log|v|) profiles for every vector.
    bool keep_profiles = false;
};

struct VectorRecord {
    std::size_t index = 0;
    double eigenvalue = 0.0;
    HalfLatticePoint center;
    double rate = 0.0;
    bool boundary = false;
    bool pass = false;
};

struct ProfileEntry {
    double distance = 0.0;  // sup-norm distance to the vector's center
    double log_abs = 0.0;
    bool resolved = true;   // above the vector's resolution floor
};

struct LocalizationReport {
    bool phase_condition = false;
    std::vector<HalfLatticePoint> phase_violations;
    double threshold = 0.0;
    std::vector<VectorRecord> vectors;
    std::size_t interior = 0, interior_pass = 0;
    double pass_fraction = 0.0;
    double mean_rate_interior = 0.0, mean_rate_boundary = 0.0;
    double max_residual = 0.0;
    /// Rate histogram: 40 bins of width bin_width from 0, sized to the largest non-sentinel rate;
    /// the last bin is open.
    std::vector<std::size_t> histogram;
    double bin_width = 0.0;
    /// One per vector when keep_profiles is set; exact zeros omitted.
    std::vector<std::vector<ProfileEntry>> profiles;
};

LocalizationReport localization_report(const ModelParams& params, const LocalizationOptions& opt);

}  // namespace qp
