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
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qp/lattice.hpp"

namespace qp {

/// (d, eps, omega, theta, E) for H(theta) = eps*Laplacian + cos 2pi(theta + n.omega).
struct ModelParams {
    int d = 1;
    double eps = 0.0;
    std::vector<double> omega{0.6180339887498949};
    double theta = 0.0;
    double energy = 0.0;
};

inline constexpr std::size_t kDenseLimit = 4096;

/// Symmetric band matrix, lower band stored column-wise: (i, j) with 0 <= i - j <= bw.
class BandedSymmetric {
public:
    BandedSymmetric() = default;
    BandedSymmetric(std::size_t n, std::size_t bw) : n_(n), bw_(bw), data_((bw + 1) * n, 0.0) {}

    std::size_t size() const { return n_; }
    std::size_t bandwidth() const { return bw_; }
    /// Requires i >= j and i - j <= bandwidth().
    double& lower(std::size_t i, std::size_t j) { return data_[(i - j) + (bw_ + 1) * j]; }
    double lower(std::size_t i, std::size_t j) const { return data_[(i - j) + (bw_ + 1) * j]; }
    double operator()(std::size_t i, std::size_t j) const;

    Eigen::MatrixXd to_dense() const;
    /// Max absolute row sum; upper bound for the operator norm.
    double inf_norm() const;

private:
    std::size_t n_ = 0, bw_ = 0;
    std::vector<double> data_;
};

/// Finite-volume T = H - E on a region of Z^d.
struct OperatorInstance {
    ModelParams params;
    Region region;
    /// Set when |region| <= dense limit.
    std::optional<Eigen::MatrixXd> dense;
    /// Set above the dense limit.
    std::optional<BandedSymmetric> banded;

    std::size_t size() const { return region.size(); }
    Eigen::MatrixXd to_dense() const { return dense ? *dense : banded->to_dense(); }
};

/// theta0 with cos 2pi theta0 = E: real in [0, 1/2] for |E| <= 1, else Re in {0, 1/2}, Im > 0.
std::complex<double> base_phase(double energy);

/// theta + n.omega for a lattice point.
double orbit_phase(const ModelParams& p, const HalfLatticePoint& n);

/// Nearest-neighbour (l1 distance 1) bonds as index pairs (i < j) into region.points().
std::vector<std::pair<std::size_t, std::size_t>> bonds(const Region& region);

OperatorInstance assemble_T(const Region& region, const ModelParams& params, std::size_t dense_limit = kDenseLimit);
Eigen::MatrixXd assemble_dense(const Region& region, const ModelParams& params);
BandedSymmetric assemble_banded(const Region& region, const ModelParams& params);

/// cos 2pi(z + n.omega) - E on the diagonal, eps on bonds. Region may be half-integer.
Eigen::MatrixXcd complexified_T(const Region& region, const ModelParams& params, std::complex<double> z);
/// Diagonal of dM/dz for complexified_T.
Eigen::VectorXcd complexified_T_derivative(const Region& region, const ModelParams& params, std::complex<double> z);

/// Determinant as exp(log_abs) * phase; zero flagged separately.
struct LogDet {
    double log_abs = 0.0;
    std::complex<double> phase{1.0, 0.0};
    bool zero = false;

    std::complex<double> value() const;
    /// det(this) / det(other), computed without forming either.
    std::complex<double> ratio(const LogDet& other) const;
};

LogDet log_determinant(const Eigen::MatrixXcd& m);
LogDet log_determinant(const Eigen::MatrixXd& m);

}  // namespace qp
