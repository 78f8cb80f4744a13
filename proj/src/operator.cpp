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
#include "qp/operator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qp/error.hpp"

namespace qp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_region(const Region& region, const ModelParams& params) {
    if (region.empty()) throw Error("empty-region", "operator requested on an empty region");
    if (region.dim() != params.d) throw Error("dimension-mismatch", "region dimension differs from model dimension");
    if (static_cast<int>(params.omega.size()) != params.d)
        throw Error("dimension-mismatch", "frequency vector length differs from model dimension");
}

}  // namespace

double BandedSymmetric::operator()(std::size_t i, std::size_t j) const {
    if (i < j) std::swap(i, j);
    if (i - j > bw_) return 0.0;
    return lower(i, j);
}

Eigen::MatrixXd BandedSymmetric::to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
    for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t i = j; i < std::min(n_, j + bw_ + 1); ++i) m(i, j) = m(j, i) = lower(i, j);
    return m;
}

double BandedSymmetric::inf_norm() const {
    std::vector<double> rows(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t i = j; i < std::min(n_, j + bw_ + 1); ++i) {
            rows[i] += std::abs(lower(i, j));
            if (i != j) rows[j] += std::abs(lower(i, j));
        }
    return rows.empty() ? 0.0 : *std::max_element(rows.begin(), rows.end());
}

std::complex<double> base_phase(double energy) {
    if (std::abs(energy) <= 1.0) return std::acos(energy) / kTwoPi;
    const double b = std::acosh(std::abs(energy)) / kTwoPi;
    return {energy > 0 ? 0.0 : 0.5, b};
}

double orbit_phase(const ModelParams& p, const HalfLatticePoint& n) { return p.theta + n.dot(p.omega); }

std::vector<std::pair<std::size_t, std::size_t>> bonds(const Region& region) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const auto& pts = region.points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (int a = 0; a < region.dim(); ++a) {
            HalfLatticePoint q = pts[i];
            q.set_doubled(a, q.doubled(a) + 2);
            auto j = region.index_of(q);
            if (j >= 0) out.emplace_back(i, static_cast<std::size_t>(j));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Eigen::MatrixXd assemble_dense(const Region& region, const ModelParams& params) {
    check_region(region, params);
    if (!region.points().front().is_integer()) throw Error("parity-mismatch", "assemble_T needs a region of Z^d");
    const std::size_t n = region.size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = std::cos(kTwoPi * orbit_phase(params, region[i])) - params.energy;
    for (auto [i, j] : bonds(region)) m(i, j) = m(j, i) = params.eps;
    return m;
}

BandedSymmetric assemble_banded(const Region& region, const ModelParams& params) {
    check_region(region, params);
    if (!region.points().front().is_integer()) throw Error("parity-mismatch", "assemble_T needs a region of Z^d");
    const auto b = bonds(region);
    std::size_t bw = 0;
    for (auto [i, j] : b) bw = std::max(bw, j - i);
    BandedSymmetric m(region.size(), bw);
    for (std::size_t i = 0; i < region.size(); ++i)
        m.lower(i, i) = std::cos(kTwoPi * orbit_phase(params, region[i])) - params.energy;
    for (auto [i, j] : b) m.lower(j, i) = params.eps;
    return m;
}

OperatorInstance assemble_T(const Region& region, const ModelParams& params, std::size_t dense_limit) {
    OperatorInstance op;
    op.params = params;
    op.region = region;
    if (region.size() <= dense_limit)
        op.dense = assemble_dense(region, params);
    else
        op.banded = assemble_banded(region, params);
    return op;
}

Eigen::MatrixXcd complexified_T(const Region& region, const ModelParams& params, std::complex<double> z) {
    check_region(region, params);
    const std::size_t n = region.size();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = std::cos(kTwoPi * (z + region[i].dot(params.omega))) - params.energy;
    for (auto [i, j] : bonds(region)) m(i, j) = m(j, i) = params.eps;
    return m;
}

Eigen::VectorXcd complexified_T_derivative(const Region& region, const ModelParams& params, std::complex<double> z) {
    check_region(region, params);
    Eigen::VectorXcd v(region.size());
    for (std::size_t i = 0; i < region.size(); ++i)
        v(i) = -kTwoPi * std::sin(kTwoPi * (z + region[i].dot(params.omega)));
    return v;
}

std::complex<double> LogDet::value() const {
    if (zero) return 0.0;
    return std::exp(log_abs) * phase;
}

std::complex<double> LogDet::ratio(const LogDet& other) const {
    if (zero) return 0.0;
    if (other.zero) return {std::numeric_limits<double>::infinity(), 0.0};
    return std::exp(log_abs - other.log_abs) * phase / other.phase;
}

LogDet log_determinant(const Eigen::MatrixXcd& m) {
    LogDet r;
    if (m.rows() == 0) return r;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
    const auto& u = lu.matrixLU();
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        const std::complex<double> p = u(i, i);
        const double a = std::abs(p);
        if (a == 0.0) {
            r.zero = true;
            r.log_abs = -std::numeric_limits<double>::infinity();
            return r;
        }
        r.log_abs += std::log(a);
        r.phase *= p / a;
    }
    r.phase *= static_cast<double>(lu.permutationP().determinant());
    r.phase /= std::abs(r.phase);
    return r;
}

LogDet log_determinant(const Eigen::MatrixXd& m) { return log_determinant(Eigen::MatrixXcd(m.cast<std::complex<double>>())); }

}  // namespace qp
