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
#include "qp/green.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qp/error.hpp"
#include "qp/torus.hpp"

namespace qp {

namespace {

double spectral_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

double inverse_norm(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    return smin > 0 ? 1.0 / smin : std::numeric_limits<double>::infinity();
}

template <class Matrix>
Matrix take(const Matrix& m, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    Matrix out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
    return out;
}

template <class Scalar>
SchurResult<Scalar> schur_impl(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& M,
                               const std::vector<std::size_t>& keep_in) {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const std::size_t n = M.rows();
    SchurResult<Scalar> r;
    std::vector<char> mark(n, 0);
    for (auto k : keep_in) {
        if (k >= n) throw Error("bad-index", "schur_complement index out of range");
        mark[k] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) (mark[i] ? r.keep : r.eliminated).push_back(i);
    const Matrix A = take(M, r.keep, r.keep);
    const Matrix B = take(M, r.keep, r.eliminated);
    const Matrix C = take(M, r.eliminated, r.keep);
    const Matrix D = take(M, r.eliminated, r.eliminated);
    if (D.size() == 0) {
        r.S = A;
    } else {
        Eigen::PartialPivLU<Matrix> lu(D);
        double dn = D.cwiseAbs().rowwise().sum().maxCoeff();
        double rcond = lu.rcond();
        if (!(rcond > 1e-15) || dn == 0.0)
            throw Error("near-singular", "eliminated block of the Schur complement is near-singular", rcond);
        r.S = A - B * lu.solve(C);
    }
    r.det_M = log_determinant(Eigen::MatrixXcd(M.template cast<std::complex<double>>()));
    r.det_eliminated = log_determinant(Eigen::MatrixXcd(D.template cast<std::complex<double>>()));
    r.det_S = log_determinant(Eigen::MatrixXcd(r.S.template cast<std::complex<double>>()));
    if (r.det_M.zero) {
        r.det_rel_error = (r.det_S.zero || r.det_eliminated.zero) ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
        LogDet prod;
        prod.log_abs = r.det_eliminated.log_abs + r.det_S.log_abs;
        prod.phase = r.det_eliminated.phase * r.det_S.phase;
        prod.zero = r.det_eliminated.zero || r.det_S.zero;
        r.det_rel_error = std::abs(1.0 - prod.ratio(r.det_M));
    }
    return r;
}

}  // namespace

GreensFunction invert(const OperatorInstance& T, std::optional<double> singularity_tol) {
    const Eigen::MatrixXd M = T.to_dense();
    const std::size_t n = M.rows();
    GreensFunction g;
    g.region = T.region;
    double tnorm;
    double smin;
    if (n <= kExactNormLimit) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();
        tnorm = ev.cwiseAbs().maxCoeff();
        smin = ev.cwiseAbs().minCoeff();
        g.exact_norm = true;
    } else {
        tnorm = M.cwiseAbs().rowwise().sum().maxCoeff();
        smin = -1.0;
        g.exact_norm = false;
    }
    const double tol = singularity_tol.value_or(1e-12 * tnorm);
    if (smin >= 0.0 && smin < tol) throw Error("near-singular", "smallest singular value below tolerance", smin);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    g.entries = lu.inverse();
    if (!g.entries.allFinite()) throw Error("near-singular", "factorisation produced non-finite inverse", 0.0);
    if (smin >= 0.0) {
        g.smallest_singular_value = smin;
        g.op_norm = 1.0 / smin;
    } else {
        // Symmetric G: ||G||_2 <= ||G||_1.
        g.op_norm = g.entries.cwiseAbs().colwise().sum().maxCoeff();
        g.smallest_singular_value = 1.0 / g.op_norm;
        if (g.smallest_singular_value < tol)
            throw Error("near-singular", "inverse norm bound exceeds tolerance", g.smallest_singular_value);
    }
    g.condition_estimate = tnorm * g.op_norm;
    g.residual = (M * g.entries - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    return g;
}

double resonance_distance(const ModelParams& p, const HalfLatticePoint& k, std::complex<double> theta_s) {
    const double ph = orbit_phase(p, k);
    return std::min(torus_norm(ph + theta_s), torus_norm(ph - theta_s));
}

ZeroGoodCheck check_zero_good(const Region& region, const ModelParams& params, std::complex<double> theta0,
                              double delta0) {
    ZeroGoodCheck out;
    for (const auto& k : region) {
        double r = resonance_distance(params, k, theta0);
        if (r < delta0) out.witnesses.emplace_back(k, r - delta0);
    }
    out.is_good = out.witnesses.empty();
    return out;
}

double max_rate_sentinel(double eps) {
    if (!(eps > 0.0)) eps = std::numeric_limits<double>::min();
    return 10.0 * std::abs(std::log(eps));
}

NeumannCertificate neumann_certificate(const OperatorInstance& T, double delta0, bool verify) {
    NeumannCertificate c;
    c.norm_bound = std::pow(delta0, -2.0);
    const double eps = T.params.eps;
    c.gamma0 = eps > 0.0 ? 0.5 * std::abs(std::log(eps)) : std::numeric_limits<double>::infinity();
    if (!verify) return c;
    GreensFunction g = invert(T);
    c.norm = g.op_norm;
    c.decay_margin = std::numeric_limits<double>::infinity();
    const auto& pts = T.region.points();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (i == j) continue;
            const double a = std::abs(g.entries(i, j));
            if (a == 0.0) continue;
            const double m = -std::log(a) - c.gamma0 * l1_distance(pts[i], pts[j]);
            if (m < c.decay_margin) {
                c.decay_margin = m;
                c.worst_x = pts[i];
                c.worst_y = pts[j];
            }
        }
    c.verified = true;
    if (!(c.norm < c.norm_bound))
        throw Error("certificate-violated", "||G|| exceeds delta0^-2", c.norm);
    if (c.decay_margin <= 0.0)
        throw Error("certificate-violated",
                    "|G(x,y)| exceeds exp(-gamma0 ||x-y||_1) at " + c.worst_x.to_string() + "," + c.worst_y.to_string(),
                    c.decay_margin);
    return c;
}

SchurResult<double> schur_complement(const Eigen::MatrixXd& M, const std::vector<std::size_t>& keep) {
    return schur_impl<double>(M, keep);
}

SchurResult<std::complex<double>> schur_complement(const Eigen::MatrixXcd& M, const std::vector<std::size_t>& keep) {
    return schur_impl<std::complex<double>>(M, keep);
}

SchurNormBound schur_norm_bound(const Eigen::MatrixXd& M, const std::vector<std::size_t>& keep) {
    auto r = schur_complement(M, keep);
    SchurNormBound b;
    const Eigen::MatrixXd D = take(M, r.eliminated, r.eliminated);
    const Eigen::MatrixXd B = take(M, r.keep, r.eliminated);
    b.inv_S = inverse_norm(r.S);
    b.inv_M = inverse_norm(M);
    b.inv_eliminated = D.size() ? inverse_norm(D) : 0.0;
    b.coupling_norm = B.size() ? spectral_norm(B) : 0.0;
    b.upper = 4.0 * std::pow(1.0 + b.inv_eliminated, 2) * (1.0 + b.inv_S);
    // Relative slack covers round-off when ||S^-1|| == ||M^-1|| (block-diagonal case).
    b.holds = b.inv_S <= b.inv_M * (1.0 + 1e-10) && b.inv_M < b.upper;
    return b;
}

namespace {

Eigen::MatrixXd boundary_coupling(const Region& sub, const Region& full, double eps,
                                  std::vector<std::size_t>& sub_in_full, std::vector<std::size_t>& out_idx) {
    // Gamma(w, w') = eps for w in sub, w' in full \ sub with ||w - w'||_1 = 1.
    Boundary bd = boundary(sub, full);
    std::vector<HalfLatticePoint> outer = bd.outer_side;
    out_idx.clear();
    for (const auto& q : outer) out_idx.push_back(static_cast<std::size_t>(full.index_of(q)));
    sub_in_full.clear();
    for (const auto& p : sub) sub_in_full.push_back(static_cast<std::size_t>(full.index_of(p)));
    Eigen::MatrixXd Gam = Eigen::MatrixXd::Zero(sub.size(), outer.size());
    for (const auto& [w, wp] : bd.pairs) {
        if (l1_distance(w, wp) != 1.0) continue;
        auto i = sub.index_of(w);
        auto j = std::lower_bound(outer.begin(), outer.end(), wp) - outer.begin();
        Gam(i, j) = eps;
    }
    return Gam;
}

}  // namespace

double resolvent_residual(const Region& sub, const OperatorInstance& T, const HalfLatticePoint& x,
                          const HalfLatticePoint& y) {
    if (!sub.subset_of(T.region)) throw Error("not-nested", "resolvent_residual: inner region not contained");
    if (!sub.contains(x) || !T.region.contains(y)) throw Error("bad-point", "x must lie in the inner region, y in the outer");
    OperatorInstance Ts = assemble_T(sub, T.params);
    GreensFunction Gs = invert(Ts);
    GreensFunction G = invert(T);
    std::vector<std::size_t> sub_in_full, out_idx;
    Eigen::MatrixXd Gam = boundary_coupling(sub, T.region, T.params.eps, sub_in_full, out_idx);
    const auto xi = sub.index_of(x);
    const auto yi = T.region.index_of(y);
    double rhs = 0.0;
    const auto ys = sub.index_of(y);
    if (ys >= 0) rhs = Gs.entries(xi, ys);
    for (Eigen::Index w = 0; w < Gam.rows(); ++w)
        for (Eigen::Index v = 0; v < Gam.cols(); ++v)
            if (Gam(w, v) != 0.0) rhs -= Gs.entries(xi, w) * Gam(w, v) * G.entries(out_idx[v], yi);
    return std::abs(G.entries(sub_in_full[xi], yi) - rhs);
}

double resolvent_residual_max(const Region& sub, const OperatorInstance& T) {
    if (!sub.subset_of(T.region)) throw Error("not-nested", "resolvent_residual: inner region not contained");
    OperatorInstance Ts = assemble_T(sub, T.params);
    GreensFunction Gs = invert(Ts);
    GreensFunction G = invert(T);
    std::vector<std::size_t> sub_in_full, out_idx;
    Eigen::MatrixXd Gam = boundary_coupling(sub, T.region, T.params.eps, sub_in_full, out_idx);
    const std::size_t n = T.region.size();
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(sub.size(), n);
    for (std::size_t j = 0; j < sub.size(); ++j) rhs.col(sub_in_full[j]) = Gs.entries.col(j);
    Eigen::MatrixXd Gout(out_idx.size(), n);
    for (std::size_t v = 0; v < out_idx.size(); ++v) Gout.row(v) = G.entries.row(out_idx[v]);
    if (Gam.cols() > 0) rhs -= Gs.entries * Gam * Gout;
    Eigen::MatrixXd lhs(sub.size(), n);
    for (std::size_t i = 0; i < sub.size(); ++i) lhs.row(i) = G.entries.row(sub_in_full[i]);
    return (lhs - rhs).cwiseAbs().maxCoeff();
}

DecayFit fit_decay(const GreensFunction& G, double threshold_radius, double max_rate) {
    DecayFit f;
    f.threshold_radius = threshold_radius;
    double best = std::numeric_limits<double>::infinity(), second = best;
    const auto& pts = G.region.points();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (!(sup_distance(pts[i], pts[j]) > threshold_radius)) continue;
            ++f.pairs;
            const double a = std::abs(G.entries(i, j));
            const double rate = a > 0.0 ? -std::log(a) / l1_distance(pts[i], pts[j]) : max_rate;
            if (rate < best) {
                second = best;
                best = rate;
                f.worst_x = pts[i];
                f.worst_y = pts[j];
            } else if (rate < second) {
                second = rate;
            }
        }
    if (f.pairs == 0) throw Error("region-too-small", "no pair beyond the decay threshold radius");
    f.rate = std::min(best, max_rate);
    f.residual = std::isfinite(second) ? std::min(second, max_rate) - f.rate : 0.0;
    return f;
}

}  // namespace qp
