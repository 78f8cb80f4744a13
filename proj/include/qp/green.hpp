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

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qp/lattice.hpp"
#include "qp/operator.hpp"

namespace qp {

struct GreensFunction {
    Region region;
    Eigen::MatrixXd entries;
    double op_norm = 0.0;
    /// ||T|| * ||G||.
    double condition_estimate = 0.0;
    /// max |T G - I|.
    double residual = 0.0;
    double smallest_singular_value = 0.0;
    /// op_norm is exact (spectral) rather than an upper bound.
    bool exact_norm = true;
};

/// Above this size op_norm falls back to the l1 bound.
inline constexpr std::size_t kExactNormLimit = 1024;

/// singularity_tol defaults to 1e-12 ||T||.
GreensFunction invert(const OperatorInstance& T, std::optional<double> singularity_tol = std::nullopt);

/// min over sign of ||theta + k.omega +- theta0||.
double resonance_distance(const ModelParams& p, const HalfLatticePoint& k, std::complex<double> theta_s);

struct ZeroGoodCheck {
    bool is_good = true;
    /// Offending sites with their margin (distance - delta0, negative).
    std::vector<std::pair<HalfLatticePoint, double>> witnesses;
};

ZeroGoodCheck check_zero_good(const Region& region, const ModelParams& params, std::complex<double> theta0, double delta0);

struct NeumannCertificate {
    double norm_bound = 0.0;  // delta0^-2
    double gamma0 = 0.0;      // |log eps| / 2
    bool verified = false;
    double norm = 0.0;
    /// min over x != y of (-log|G(x,y)| - gamma0 ||x-y||_1); >= 0 passes.
    double decay_margin = 0.0;
    HalfLatticePoint worst_x, worst_y;
};

/// A-priori bounds on a 0-good region; with verify the inverse is checked entrywise
/// and "certificate-violated" is thrown on failure.
NeumannCertificate neumann_certificate(const OperatorInstance& T, double delta0, bool verify = true);

template <class Scalar>
struct SchurResult {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Matrix S;
    std::vector<std::size_t> keep, eliminated;
    LogDet det_M, det_eliminated, det_S;
    /// |det M - det M_elim det S| / |det M|.
    double det_rel_error = 0.0;
};

/// S = M_keep - M_{keep,elim} M_elim^{-1} M_{elim,keep}.
SchurResult<double> schur_complement(const Eigen::MatrixXd& M, const std::vector<std::size_t>& keep);
SchurResult<std::complex<double>> schur_complement(const Eigen::MatrixXcd& M, const std::vector<std::size_t>& keep);

struct SchurNormBound {
    double inv_S = 0.0;
    double inv_M = 0.0;
    double inv_eliminated = 0.0;
    double upper = 0.0;  // 4 (1 + ||elim^-1||)^2 (1 + ||S^-1||)
    double coupling_norm = 0.0;
    bool holds = false;
};

SchurNormBound schur_norm_bound(const Eigen::MatrixXd& M, const std::vector<std::size_t>& keep);

/// |G_big(x,y) - [G_sub(x,y) chi_sub(y) - sum_boundary G_sub(x,w) Gamma(w,w') G_big(w',y)]|.
double resolvent_residual(const Region& sub, const OperatorInstance& T, const HalfLatticePoint& x,
                          const HalfLatticePoint& y);
/// Same identity, maximised over every x in sub and y in the full region.
double resolvent_residual_max(const Region& sub, const OperatorInstance& T);

struct DecayFit {
    double rate = 0.0;
    double threshold_radius = 0.0;
    /// Gap between the worst and second-worst pair rates.
    double residual = 0.0;
    HalfLatticePoint worst_x, worst_y;
    std::size_t pairs = 0;
};

/// Certified uniform rate min (-log|G(x,y)|)/||x-y||_1 over ||x-y|| > threshold.
DecayFit fit_decay(const GreensFunction& G, double threshold_radius, double max_rate);

/// 10 |log eps|.
double max_rate_sentinel(double eps);

}  // namespace qp
