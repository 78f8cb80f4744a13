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
#include "qp/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qp/error.hpp"
#include "qp/green.hpp"

namespace qp {

EigenpairSet eigensolve(const Eigen::MatrixXd& H, const Region& region, std::size_t dense_limit) {
    if (static_cast<std::size_t>(H.rows()) > dense_limit)
        throw Error("too-large", "eigensolve above the dense limit; split the window into smaller runs");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success) throw Error("eigensolver", "symmetric eigensolver did not converge");
    EigenpairSet s;
    s.eigenvalues = es.eigenvalues();
    s.eigenvectors = es.eigenvectors();
    s.region = region;
    s.norm = s.eigenvalues.size() ? s.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index j = 0; j < s.eigenvectors.cols(); ++j) {
        auto v = s.eigenvectors.col(j);
        const double cut = 1e-8 * v.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (std::abs(v(i)) > cut) {
                if (v(i) < 0) v = -v;
                break;
            }
    }
    s.resolution_floor.assign(s.eigenvalues.size(), 0.0);
    return s;
}

void set_dense_resolution_floor(EigenpairSet& set) {
    const Eigen::Index n = set.eigenvalues.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        double gap = std::numeric_limits<double>::infinity();
        if (i > 0) gap = std::min(gap, set.eigenvalues(i) - set.eigenvalues(i - 1));
        if (i + 1 < n) gap = std::min(gap, set.eigenvalues(i + 1) - set.eigenvalues(i));
        gap = std::max(gap, std::numeric_limits<double>::min());
        set.resolution_floor[i] = 16.0 * std::numeric_limits<double>::epsilon() * std::max(set.norm, 1.0) / gap;
    }
}

namespace {

Eigen::VectorXd twisted_vector(const BandedSymmetric& H, double lambda) {
    const std::size_t n = H.size();
    const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
    auto guard = [&](double x) { return std::abs(x) < tiny ? (x < 0 ? -tiny : tiny) : x; };
    std::vector<double> a(n), b(n > 0 ? n - 1 : 0), Dp(n), Dm(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = H.lower(i, i) - lambda;
    for (std::size_t i = 0; i + 1 < n; ++i) b[i] = H.lower(i + 1, i);
    Dp[0] = guard(a[0]);
    for (std::size_t i = 1; i < n; ++i) Dp[i] = guard(a[i] - b[i - 1] * b[i - 1] / Dp[i - 1]);
    Dm[n - 1] = guard(a[n - 1]);
    for (std::size_t i = n - 1; i-- > 0;) Dm[i] = guard(a[i] - b[i] * b[i] / Dm[i + 1]);
    std::size_t k = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = std::abs(Dp[i] + Dm[i] - a[i]);
        if (g < best) {
            best = g;
            k = i;
        }
    }
    Eigen::VectorXd z(n);
    z(k) = 1.0;
    for (std::size_t i = k; i-- > 0;) z(i) = -b[i] / Dp[i] * z(i + 1);
    for (std::size_t i = k + 1; i < n; ++i) z(i) = -b[i - 1] / Dm[i] * z(i - 1);
    z /= z.norm();
    return z;
}

}  // namespace

void refine_tridiagonal(EigenpairSet& set, const BandedSymmetric& H) {
    if (H.bandwidth() > 1) throw Error("not-tridiagonal", "twisted refinement needs a tridiagonal operator");
    for (Eigen::Index j = 0; j < set.eigenvalues.size(); ++j) {
        Eigen::VectorXd z = twisted_vector(H, set.eigenvalues(j));
        if (set.eigenvectors.col(j).dot(z) < 0) z = -z;
        set.eigenvectors.col(j) = z;
        set.resolution_floor[j] = 0.0;
    }
}

double max_relative_residual(const EigenpairSet& set, const Eigen::MatrixXd& H) {
    const double hn = std::max(set.norm, std::numeric_limits<double>::min());
    Eigen::MatrixXd R = H * set.eigenvectors - set.eigenvectors * set.eigenvalues.asDiagonal();
    return R.colwise().norm().maxCoeff() / hn;
}

EigenvectorDecay fit_eigenvector_decay(const Eigen::VectorXd& v, const Region& region, double max_rate, double r_min,
                                       double floor) {
    EigenvectorDecay f;
    Eigen::Index c = 0;
    v.cwiseAbs().maxCoeff(&c);  // first maximiser = lexicographically smallest point
    f.center = region[c];
    f.prefactor_log = std::log(static_cast<double>(region.size()));
    f.rate = max_rate;
    bool any = false;
    for (std::size_t i = 0; i < region.size(); ++i) {
        const double r = sup_distance(region[i], f.center);
        if (r < r_min) continue;
        any = true;
        const double a = std::abs(v(i));
        if (a == 0.0 || a <= floor) continue;
        ++f.used;
        f.rate = std::min(f.rate, (f.prefactor_log - std::log(a)) / r);
    }
    if (!any) throw Error("region-too-small", "no site at distance >= r_min from the eigenvector centre");
    return f;
}

LocalizationReport localization_report(const ModelParams& params, const LocalizationOptions& opt) {
    LocalizationReport rep;
    auto phase = verify_phase_condition(params.theta, params.omega, opt.tau1, opt.phase_r_min, opt.phase_r_max);
    rep.phase_condition = phase.pass;
    rep.phase_violations = phase.violations;
    rep.threshold = opt.threshold > 0 ? opt.threshold : std::abs(std::log(params.eps)) / 24.0;

    const Region box = Region::cube(params.d, opt.N, HalfLatticePoint::origin(params.d));
    ModelParams hp = params;
    hp.energy = 0.0;
    const BandedSymmetric Hb = assemble_banded(box, hp);
    const Eigen::MatrixXd H = Hb.to_dense();
    EigenpairSet set = eigensolve(H, box);
    if (params.d == 1)
        refine_tridiagonal(set, Hb);
    else
        set_dense_resolution_floor(set);
    rep.max_residual = max_relative_residual(set, H);

    const double max_rate = max_rate_sentinel(params.eps);
    const double collar = opt.boundary_fraction * opt.N;
    double sum_in = 0, sum_bd = 0;
    std::size_t n_bd = 0;
    for (Eigen::Index j = 0; j < set.eigenvalues.size(); ++j) {
        auto fit = fit_eigenvector_decay(set.eigenvectors.col(j), box, max_rate, opt.r_min, set.resolution_floor[j]);
        VectorRecord r;
        r.index = static_cast<std::size_t>(j);
        r.eigenvalue = set.eigenvalues(j);
        r.center = fit.center;
        r.rate = fit.rate;
        r.boundary = opt.N - fit.center.norm() < collar;
        r.pass = r.rate >= rep.threshold;
        if (r.boundary) {
            sum_bd += r.rate;
            ++n_bd;
        } else {
            sum_in += r.rate;
            ++rep.interior;
            rep.interior_pass += r.pass;
        }
        rep.vectors.push_back(r);
        if (opt.keep_profiles) {
            std::vector<ProfileEntry> prof;
            for (std::size_t i = 0; i < box.size(); ++i) {
                const double a = std::abs(set.eigenvectors(static_cast<Eigen::Index>(i), j));
                if (a == 0.0) continue;
                prof.push_back({sup_distance(box[i], fit.center), std::log(a), a > set.resolution_floor[j]});
            }
            rep.profiles.push_back(std::move(prof));
        }
    }
    rep.pass_fraction = rep.interior ? static_cast<double>(rep.interior_pass) / rep.interior : 0.0;
    rep.mean_rate_interior = rep.interior ? sum_in / rep.interior : 0.0;
    rep.mean_rate_boundary = n_bd ? sum_bd / n_bd : 0.0;
    // 40 bins up to the largest resolved rate; sentinel rates (exact zeros) fall in the last bin.
    double top = 2.0 * rep.threshold;
    for (const auto& r : rep.vectors)
        if (r.rate < max_rate) top = std::max(top, r.rate);
    rep.bin_width = top / 39.0;
    rep.histogram.assign(40, 0);
    for (const auto& r : rep.vectors) {
        auto b = static_cast<std::size_t>(std::max(0.0, r.rate) / rep.bin_width);
        rep.histogram[std::min<std::size_t>(b, rep.histogram.size() - 1)]++;
    }
    return rep;
}

}  // namespace qp
