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
#include "qp/msa.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "qp/error.hpp"
#include "qp/green.hpp"
#include "qp/torus.hpp"

namespace qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586476925286766559;
// log of the smallest normal double; below this delta is only symbolic
const double kLogMin = std::log(std::numeric_limits<double>::min());
constexpr double kMaxEngineN = 1e6;

/// Points of a sorted set within sup distance R of k (first coordinate narrows the scan).
std::vector<HalfLatticePoint> near(const std::vector<HalfLatticePoint>& P, const HalfLatticePoint& k, double R) {
    std::vector<HalfLatticePoint> out;
    const auto R2 = static_cast<std::int64_t>(std::floor(2.0 * R + 1e-9));
    const std::int64_t lo = k.doubled(0) - R2, hi = k.doubled(0) + R2;
    auto it = std::lower_bound(P.begin(), P.end(), lo,
                               [](const HalfLatticePoint& p, std::int64_t v) { return p.doubled(0) < v; });
    for (; it != P.end() && it->doubled(0) <= hi; ++it)
        if (sup_distance(*it, k) <= R + 1e-12) out.push_back(*it);
    return out;
}

bool subset_translate(const Region& tmpl, const HalfLatticePoint& k, const Region& big) {
    for (const auto& p : tmpl)
        if (!big.contains(p + k)) return false;
    return true;
}

bool intersects_translate(const Region& tmpl, const HalfLatticePoint& k, const Region& big) {
    for (const auto& p : tmpl)
        if (big.contains(p + k)) return true;
    return false;
}

double region_radius(const Region& r) {
    double m = 0.0;
    for (const auto& p : r) m = std::max(m, p.norm());
    return m;
}

HalfLatticePoint coset_point(int d, unsigned parity) {
    HalfLatticePoint p(d);
    for (int i = 0; i < d; ++i) p.set_doubled(i, (parity >> i) & 1u);
    return p;
}

std::vector<HalfLatticePoint> points_of(const std::vector<TaggedSite>& v) {
    std::vector<HalfLatticePoint> out;
    out.reserve(v.size());
    for (const auto& t : v) out.push_back(t.k);
    return out;
}

Region as_region(int d, unsigned parity, const std::vector<HalfLatticePoint>& pts) {
    return Region(d, parity, pts);
}

const ScheduleEntry& entry(const MsaContext& ctx, int s) {
    if (s < 0 || s >= static_cast<int>(ctx.sched.entries.size()))
        throw Error("schedule-exhausted", "stage " + std::to_string(s) + " beyond the computed schedule");
    return ctx.sched.entries[s];
}

long engine_N(const MsaContext& ctx, int s) {
    const auto& e = entry(ctx, s);
    if (e.symbolic || !(e.N <= kMaxEngineN))
        throw Error("symbolic-stage", "N_" + std::to_string(s) + " is not numerically reachable", e.N);
    return static_cast<long>(e.N);
}

std::string pt(const HalfLatticePoint& p) { return p.to_string(); }

}  // namespace

const char* to_string(ScheduleMode m) { return m == ScheduleMode::theoretical ? "theoretical" : "practical"; }
const char* to_string(CaseTag c) { return c == CaseTag::C1 ? "C1" : "C2"; }

double ScaleParams::log_delta0() const {
    if (mode == ScheduleMode::practical && delta0 > 0) return std::log(delta0);
    return log_coupling() / 10.0;
}

void ScaleParams::validate() const {
    if (log_eps) {
        if (!(*log_eps < 0)) throw Error("invalid-scale", "log_eps must be negative", *log_eps);
    } else if (!(eps > 0 && eps < 1)) {
        throw Error("invalid-scale", "eps must lie in (0, 1)", eps);
    }
    if (!(tau > 0 && tau < 1)) throw Error("invalid-scale", "tau must lie in (0, 1)", tau);
    if (!(gamma > 0)) throw Error("invalid-scale", "gamma must be positive", gamma);
    if (!(c > 1)) throw Error("invalid-scale", "c must exceed 1", c);
    if (mode == ScheduleMode::theoretical) {
        if (!(std::pow(c, 20) < 1.0 / tau)) throw Error("c-constraint", "need 1 < c^20 < 1/tau", std::pow(c, 20));
    } else {
        if (!(kappa > 1)) throw Error("invalid-scale", "kappa must exceed 1", kappa);
        if (!(rho > 1)) throw Error("invalid-scale", "rho must exceed 1", rho);
        if (n1 < 0) throw Error("invalid-scale", "n1 must be >= 0", static_cast<double>(n1));
        if (!(delta0 >= 0 && delta0 < 1)) throw Error("invalid-scale", "delta0 must lie in [0, 1)", delta0);
        if (!(tilde_exponent > 0 && tilde_exponent <= 1))
            throw Error("invalid-scale", "tilde_exponent must lie in (0, 1]", tilde_exponent);
        if (!(case_factor > 0)) throw Error("invalid-scale", "case_factor must be positive", case_factor);
    }
}

Schedule schedule(const ScaleParams& p, int s_max) {
    if (s_max < 0) throw Error("invalid-scale", "s_max must be >= 0", s_max);
    p.validate();
    Schedule out;
    const double log_eps = std::abs(p.log_coupling());
    out.gamma_floor = 0.25 * log_eps;
    const double c5 = std::pow(p.c, 5);
    const double log_gamma = std::log(p.gamma);

    ScheduleEntry e;
    e.s = 0;
    e.log_delta = p.log_delta0();
    e.N = 0.0;
    e.gamma_rate = 0.5 * log_eps;
    for (int s = 0; s <= s_max; ++s) {
        e.symbolic = e.log_delta < kLogMin || !std::isfinite(e.N);
        e.delta = e.log_delta < kLogMin ? 0.0 : std::exp(e.log_delta);
        out.entries.push_back(e);
        if (s == s_max) break;

        ScheduleEntry n;
        n.s = s + 1;
        const double L = std::abs(log_gamma - e.log_delta);  // |log(gamma/delta_s)|
        if (p.mode == ScheduleMode::theoretical) {
            n.log_delta = log_gamma - std::pow(L, c5);
            n.N = std::floor(std::pow(L, 1.0 / (c5 * p.tau)));
        } else {
            n.log_delta = p.kappa * e.log_delta;
            if (s == 0)
                n.N = p.n1 > 0 ? static_cast<double>(p.n1) : std::max(1.0, std::floor(std::pow(L, 1.0 / (c5 * p.tau))));
            else
                n.N = std::ceil(std::pow(e.N, p.rho));
        }
        const double shrink = n.N >= 1 ? 1.0 - std::pow(n.N, 1.0 / p.c - 1.0) : 0.0;
        n.gamma_rate = e.gamma_rate * std::pow(std::max(shrink, 0.0), 3);
        e = n;
    }
    for (std::size_t i = 0; i < out.entries.size(); ++i) {
        if (i > 0 && out.entries[i].gamma_rate > out.entries[i - 1].gamma_rate) out.gamma_decreasing = false;
        if (out.entries[i].gamma_rate < out.gamma_floor) out.gamma_above_floor = false;
    }
    return out;
}

std::vector<HalfLatticePoint> SiteSets::resonant() const {
    std::vector<HalfLatticePoint> out = points_of(plus);
    for (const auto& t : minus) out.push_back(t.k);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double BlockTemplate::radius_omega() const { return region_radius(omega); }
double BlockTemplate::radius_tilde() const { return region_radius(omega_tilde); }

bool ScaleState::in_P(const HalfLatticePoint& k) const { return std::binary_search(P.begin(), P.end(), k); }

Region ScaleState::omega(const HalfLatticePoint& k) const {
    if (!blocks) return Region::from_points(k.dim(), {k});
    return blocks->omega.translated(k);
}

Region ScaleState::omega_tilde(const HalfLatticePoint& k) const {
    if (!blocks) return Region::from_points(k.dim(), {k});
    return blocks->omega_tilde.translated(k);
}

Region ScaleState::A(const HalfLatticePoint& k) const {
    if (!blocks) return Region::from_points(k.dim(), {k});
    return blocks->A.translated(k);
}

MsaContext make_context(const ModelParams& model, const ScaleParams& scale, long window, int s_max) {
    if (window < 1) throw Error("invalid-window", "window radius must be >= 1", static_cast<double>(window));
    if (model.d < 1 || model.d > kMaxDim) throw Error("dimension-mismatch", "unsupported dimension", model.d);
    MsaContext ctx;
    ctx.model = model;
    ctx.scale = scale;
    ctx.scale.eps = model.eps;
    ctx.scale.log_eps.reset();
    ctx.sched = schedule(ctx.scale, s_max);
    ctx.window = window;
    return ctx;
}

SiteSets classify_sites(const ScaleState& st, const MsaContext& ctx) {
    SiteSets q;
    const double thr = st.delta;
    const double thr_t = st.delta > 0 ? std::exp(ctx.scale.effective_tilde_exponent() * st.log_delta) : 0.0;
    q.min_margin = kInf;
    for (const auto& k : st.P) {
        const double a = orbit_phase(ctx.model, k);
        const double dp = torus_norm(std::complex<double>(a) + st.theta);
        const double dm = torus_norm(std::complex<double>(a) - st.theta);
        if (dp < thr) q.plus.push_back({k, dp});
        if (dm < thr) q.minus.push_back({k, dm});
        if (dp < thr_t) q.tilde_plus.push_back({k, dp});
        if (dm < thr_t) q.tilde_minus.push_back({k, dm});
        for (double v : {dp, dm})
            q.min_margin = std::min({q.min_margin, std::abs(v - thr), std::abs(v - thr_t)});
    }
    return q;
}

ScaleState init_stage0(const MsaContext& ctx) {
    const double E = ctx.model.energy;
    if (!(std::abs(E) <= 2.0)) throw Error("energy-out-of-range", "stage 0 needs E in [-2, 2]", E);
    const auto& e0 = entry(ctx, 0);
    ScaleState st;
    st.s = 0;
    st.log_delta = e0.log_delta;
    st.delta = e0.delta;
    st.N = 0;
    st.gamma_rate = e0.gamma_rate;
    st.theta = base_phase(E);
    st.parity = 0;
    st.P = Region::cube(ctx.model.d, static_cast<double>(ctx.window), HalfLatticePoint::origin(ctx.model.d)).points();
    st.Q = classify_sites(st, ctx);
    return st;
}

CaseSelection select_case(const ScaleState& st, long N_next, const MsaContext& ctx) {
    CaseSelection sel;
    const int d = ctx.model.d;
    const auto qp = points_of(st.Q.plus), qm = points_of(st.Q.minus);
    const auto qtp = points_of(st.Q.tilde_plus), qtm = points_of(st.Q.tilde_minus);
    const Region Rp = as_region(d, st.parity, qp), Rm = as_region(d, st.parity, qm);
    const Region Rtp = as_region(d, st.parity, qtp), Rtm = as_region(d, st.parity, qtm);
    sel.dist_tilde_minus_plus = dist(Rtm, Rp);
    sel.dist_tilde_plus_minus = dist(Rtp, Rm);
    sel.threshold = ctx.scale.effective_case_factor() * std::pow(static_cast<double>(N_next), ctx.scale.c);
    sel.shift = HalfLatticePoint::origin(d);
    if (!(sel.dist_tilde_minus_plus <= sel.threshold)) {
        sel.tag = CaseTag::C1;
        return sel;
    }
    sel.tag = CaseTag::C2;
    const double best = sel.dist_tilde_minus_plus;
    std::optional<std::pair<HalfLatticePoint, HalfLatticePoint>> pick;
    for (const auto& i : qp)  // sorted, so the first hit per i is its smallest j
        for (const auto& j : near(qtm, i, best))
            if (sup_distance(i, j) == best) {
                if (!pick || std::make_pair(i, j) < *pick) pick = std::make_pair(i, j);
                break;
            }
    if (!pick) throw Error("internal", "minimal pair not found");
    sel.pair = pick;
    sel.shift = pick->first - pick->second;
    return sel;
}

std::pair<std::vector<HalfLatticePoint>, unsigned> build_next_sites(const ScaleState& st, const CaseSelection& sel) {
    if (sel.tag == CaseTag::C1) return {st.Q.resonant(), st.parity};
    if (!sel.shift.is_integer())
        throw Error("parity-mismatch", "shift " + pt(sel.shift) + " is not a lattice vector");
    const HalfLatticePoint half = sel.shift.half();
    std::vector<HalfLatticePoint> out;
    for (const auto& t : st.Q.minus) out.push_back(t.k + half);
    for (const auto& t : st.Q.plus) out.push_back(t.k - sel.shift + half);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return {out, st.parity ^ half.parity()};
}

namespace {

/// Greedy absorption of the cubes Lambda_rho(h) that touch J, iterated to a fixpoint.
Region close_under_cubes(Region J, const std::vector<std::pair<HalfLatticePoint, double>>& cubes, int d) {
    std::vector<bool> done(cubes.size(), false);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < cubes.size(); ++i) {
            if (done[i]) continue;
            Region C = Region::cube(d, cubes[i].second, cubes[i].first, 0);
            if (C.subset_of(J)) {
                done[i] = true;
                continue;
            }
            if (!C.intersects(J)) continue;
            J = J.united(C);
            done[i] = true;
            changed = true;
        }
    }
    return J;
}

}  // namespace

namespace {

BlockTemplate build_blocks_at(const std::vector<ScaleState>& history, const std::vector<HalfLatticePoint>& P_next,
                              const CaseSelection& sel, long N_next, const MsaContext& ctx,
                              std::optional<HalfLatticePoint> centre) {
    if (history.empty()) throw Error("internal", "empty history");
    const int d = ctx.model.d;
    const ScaleState& cur = history.back();
    const int s = cur.s;
    const double c = ctx.scale.c;
    const double Nn = static_cast<double>(N_next);
    const unsigned parity_next =
        sel.tag == CaseTag::C1 ? cur.parity : (cur.parity ^ sel.shift.half().parity());
    const HalfLatticePoint k0 = centre ? *centre : P_next.empty() ? coset_point(d, parity_next) : P_next.front();

    double r_omega, r_tilde;
    if (sel.tag == CaseTag::C1) {
        r_omega = Nn;
        r_tilde = std::pow(Nn, c);
    } else {
        r_omega = ctx.scale.effective_case_factor() * std::pow(Nn, c);
        r_tilde = std::pow(Nn, c * c);
    }
    // Lattice sites of Lambda_r(k0).
    Region J_omega = Region::cube(d, r_omega, k0, 0), J_tilde = Region::cube(d, r_tilde, k0, 0);

    if (s >= 1) {
        const double collar = 50.0 * std::pow(static_cast<double>(cur.N), c * c);
        std::vector<std::pair<HalfLatticePoint, double>> cubes;
        for (int r = 0; r <= s - 1; ++r) {
            const ScaleState& old = history[s - r];
            const double rho = 2.0 * std::pow(static_cast<double>(old.N), c * c);
            const double reach = std::max(r_omega, r_tilde) + collar + rho + 1.0;
            std::vector<HalfLatticePoint> diffs;
            for (const auto& q : P_next)
                for (const auto& p : near(old.P, q, reach)) {
                    diffs.push_back(p - q);
                    diffs.push_back(q - p);
                }
            std::sort(diffs.begin(), diffs.end());
            diffs.erase(std::unique(diffs.begin(), diffs.end()), diffs.end());
            for (const auto& v : diffs) cubes.emplace_back(k0 + v, rho);
        }
        J_omega = close_under_cubes(J_omega, cubes, d);
        J_tilde = close_under_cubes(J_tilde, cubes, d);
        for (auto [J, r] : {std::pair{&J_omega, r_omega}, std::pair{&J_tilde, r_tilde}}) {
            Region bound = Region::cube(d, r + collar, k0, 0);
            if (!J->subset_of(bound))
                throw Error("closure-overflow",
                            "block closure leaves Lambda_{" + std::to_string(r + collar) + "}(k0)", r + collar);
        }
    }

    BlockTemplate b;
    b.omega = J_omega.translated(-k0);
    b.omega_tilde = J_tilde.translated(-k0);
    const Region A_prev = cur.blocks ? cur.blocks->A : Region::from_points(d, {HalfLatticePoint::origin(d)});
    if (sel.tag == CaseTag::C1) {
        b.A = A_prev;
    } else {
        const HalfLatticePoint h = sel.shift.half();
        b.A = A_prev.translated(-h).united(A_prev.translated(h));
    }
    return b;
}

}  // namespace

BlockTemplate build_blocks(const std::vector<ScaleState>& history, const std::vector<HalfLatticePoint>& P_next,
                           const CaseSelection& sel, long N_next, const MsaContext& ctx) {
    return build_blocks_at(history, P_next, sel, N_next, ctx, std::nullopt);
}

namespace {

struct LogDerivative {
    std::complex<double> value;  // tr(M^-1 M')
    bool finite = true;
};

LogDerivative log_derivative(const Region& tmpl, const ModelParams& model, std::complex<double> z) {
    const Eigen::MatrixXcd M = complexified_T(tmpl, model, z);
    const Eigen::VectorXcd dM = complexified_T_derivative(tmpl, model, z);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    const Eigen::MatrixXcd inv = lu.inverse();
    LogDerivative r;
    r.value = (inv.diagonal().array() * dM.array()).sum();
    r.finite = std::isfinite(r.value.real()) && std::isfinite(r.value.imag());
    return r;
}

struct ContourMoments {
    double count = 0.0;
    std::complex<double> raw_count, s1, s2;
    int samples = 0;
};

/// Trapezoid rule on |z - c| = r for (1/2 pi i) \oint (z - c)^p f'/f dz, p = 0, 1, 2, refined by doubling.
ContourMoments contour_moments(const Region& tmpl, const ModelParams& model, std::complex<double> c, double r) {
    std::vector<std::complex<double>> g;  // samples at angles 2 pi j / K
    std::vector<std::complex<double>> w;
    int K = 64;
    auto sample = [&](int K_new, int K_old) {
        std::vector<std::complex<double>> g2(K_new), w2(K_new);
        for (int j = 0; j < K_new; ++j) {
            if (K_old > 0 && j % 2 == 0) {
                g2[j] = g[j / 2];
                w2[j] = w[j / 2];
                continue;
            }
            const std::complex<double> ww = std::polar(r, kTwoPi * j / K_new);
            auto ld = log_derivative(tmpl, model, c + ww);
            if (!ld.finite) throw Error("root-count", "a zero lies on the counting contour", r);
            g2[j] = ld.value;
            w2[j] = ww;
        }
        g.swap(g2);
        w.swap(w2);
    };
    auto moments = [&]() {
        ContourMoments m;
        const int n = static_cast<int>(g.size());
        for (int j = 0; j < n; ++j) {
            m.raw_count += w[j] * g[j];
            m.s1 += w[j] * w[j] * g[j];
            m.s2 += w[j] * w[j] * w[j] * g[j];
        }
        m.raw_count /= double(n);
        m.s1 /= double(n);
        m.s2 /= double(n);
        m.count = m.raw_count.real();
        m.samples = n;
        return m;
    };
    auto integral = [](const ContourMoments& m) {
        return std::abs(m.count - std::round(m.count)) < 1e-6 && std::abs(m.raw_count.imag()) < 1e-6;
    };
    sample(K, 0);
    ContourMoments prev = moments();
    if (integral(prev)) return prev;
    for (K = 128; K <= 4096; K *= 2) {
        sample(K, K / 2);
        ContourMoments cur = moments();
        if (integral(cur) && std::abs(cur.raw_count - prev.raw_count) < 1e-6) return cur;
        prev = cur;
    }
    throw Error("root-count", "argument-principle count did not settle to an integer", prev.count);
}

/// Newton on log det with the deflation term for the partner root (if any).
std::complex<double> polish(const Region& tmpl, const ModelParams& model, std::complex<double> z,
                            const std::optional<std::complex<double>>& other, int& iterations) {
    for (int it = 0; it < 60; ++it) {
        ++iterations;
        auto ld = log_derivative(tmpl, model, z);
        std::complex<double> g = ld.value;
        if (other) g -= 1.0 / (z - *other);
        if (!ld.finite || !std::isfinite(std::abs(g))) return z;  // landed on the zero
        std::complex<double> step;
        if (std::abs(g) > 0) {
            step = 1.0 / g;
        } else {
            // Secant fallback on det ratios.
            const std::complex<double> h = 1e-7;
            LogDet f0 = log_determinant(complexified_T(tmpl, model, z));
            LogDet f1 = log_determinant(complexified_T(tmpl, model, z + h));
            step = h / (1.0 - f1.ratio(f0));
        }
        z -= step;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(z))) return z;
    }
    throw Error("root-refine", "Newton refinement did not converge near " + std::to_string(z.real()) + "+" +
                                   std::to_string(z.imag()) + "i");
}

struct Disc {
    std::complex<double> centre;
    double radius, nominal_radius;
};

Disc search_disc(const ScaleState& st, const BlockTemplate& next, const CaseSelection& sel, const MsaContext& ctx,
                 std::complex<double> centre, int expected) {
    const double nominal = std::exp((sel.tag == CaseTag::C1 ? 0.1 : 1e-3) * st.log_delta);
    const std::complex<double> t0 = base_phase(ctx.model.energy);
    std::vector<double> dists;
    for (const auto& n : next.omega_tilde) {
        const double nw = n.dot(ctx.model.omega);
        for (int sg : {1, -1}) {
            std::complex<double> zeta = double(sg) * t0 - nw;
            zeta = nearest_representative(zeta, centre.real());
            dists.push_back(std::abs(zeta - centre));
        }
    }
    std::sort(dists.begin(), dists.end());
    Disc D{centre, std::min(nominal, 0.45), nominal};
    if (static_cast<int>(dists.size()) > expected) {
        const double a = dists[expected - 1], b = dists[expected];
        if (!(b - a > 1e-12)) throw Error("root-count", "unperturbed zeros cannot be separated", b - a);
        D.radius = std::min(D.radius, 0.5 * (a + b));
    }
    return D;
}

}  // namespace

RootResult track_theta(const ScaleState& st, const BlockTemplate& next, const CaseSelection& sel,
                       const MsaContext& ctx) {
    RootResult out;
    const Region& tmpl = next.omega_tilde;
    const int expected = sel.tag == CaseTag::C1 ? 1 : 2;
    std::complex<double> centre = st.theta;
    if (sel.tag == CaseTag::C2) {
        const std::complex<double> z = sel.shift.half().dot(ctx.model.omega) + st.theta;
        out.z_next = z;
        centre = torus_norm(z) <= torus_norm(z - 0.5) ? 0.0 : 0.5;
    }
    Disc D = search_disc(st, next, sel, ctx, centre, expected);
    out.centre = D.centre;
    out.radius = D.radius;
    out.nominal_radius = D.nominal_radius;

    auto roots_in = [&](const Disc& disc, int& iters, int& samples) {
        ContourMoments m = contour_moments(tmpl, ctx.model, disc.centre, disc.radius);
        samples = m.samples;
        const int count = static_cast<int>(std::lround(m.count));
        if (count != expected) {
            std::ostringstream os;
            os << "disc |z - (" << disc.centre.real() << "+" << disc.centre.imag() << "i)| < " << disc.radius
               << " holds " << count << " zeros, expected " << expected;
            throw Error("root-count", os.str(), count);
        }
        std::vector<std::complex<double>> r;
        if (expected == 1) {
            r.push_back(polish(tmpl, ctx.model, disc.centre + m.s1, std::nullopt, iters));
        } else {
            const std::complex<double> e1 = m.s1, e2 = 0.5 * (m.s1 * m.s1 - m.s2);
            const std::complex<double> disc_sq = std::sqrt(e1 * e1 - 4.0 * e2);
            std::complex<double> a = disc.centre + 0.5 * (e1 + disc_sq), b = disc.centre + 0.5 * (e1 - disc_sq);
            for (int round = 0; round < 3; ++round) {
                a = polish(tmpl, ctx.model, a, b, iters);
                b = polish(tmpl, ctx.model, b, a, iters);
            }
            r = {a, b};
        }
        return r;
    };

    int samples = 0;
    auto roots = roots_in(D, out.newton_iterations, samples);
    out.samples = samples;
    out.count = expected;
    if (sel.tag == CaseTag::C1) {
        out.theta = roots[0];
        Disc mirror = D;
        mirror.centre = -D.centre;
        int s2 = 0;
        out.partner = roots_in(mirror, out.newton_iterations, s2)[0];
    } else {
        const auto z = *out.z_next;
        const bool first = torus_norm(roots[0] - z) <= torus_norm(roots[1] - z);
        out.theta = first ? roots[0] : roots[1];
        out.partner = first ? roots[1] : roots[0];
    }
    out.asymmetry = torus_norm(out.theta + out.partner);
    out.theta = nearest_representative(out.theta, D.centre.real());
    return out;
}

void advance(std::vector<ScaleState>& history, const MsaContext& ctx) {
    if (history.empty()) throw Error("internal", "advance needs stage 0");
    ScaleState& cur = history.back();
    const int s = cur.s;
    if (cur.delta <= 0) throw Error("symbolic-stage", "delta_s underflows; stage not numerically reachable");
    const long N_next = engine_N(ctx, s + 1);
    const CaseSelection sel = select_case(cur, N_next, ctx);
    cur.selection = sel;
    auto [P_next, parity_next] = build_next_sites(cur, sel);
    BlockTemplate blocks = build_blocks(history, P_next, sel, N_next, ctx);
    RootResult root = track_theta(cur, blocks, sel, ctx);

    const auto& e = entry(ctx, s + 1);
    ScaleState nx;
    nx.s = s + 1;
    nx.log_delta = e.log_delta;
    nx.delta = e.delta;
    nx.N = N_next;
    nx.gamma_rate = e.gamma_rate;
    nx.theta = root.theta;
    nx.shifts = cur.shifts;
    nx.shifts.push_back(sel.shift);
    nx.parity = parity_next;
    nx.P = std::move(P_next);
    nx.blocks = std::move(blocks);
    nx.case_history = cur.case_history;
    nx.case_history.push_back(sel.tag);
    nx.root = root;
    nx.Q = classify_sites(nx, ctx);
    history.push_back(std::move(nx));
}

std::vector<ScaleState> run_msa(const MsaContext& ctx, int stages) {
    std::vector<ScaleState> h;
    h.push_back(init_stage0(ctx));
    for (int i = 0; i < stages; ++i) advance(h, ctx);
    return h;
}

ModelParams plant_stage1_resonance(const MsaContext& ctx) {
    auto h = run_msa(ctx, 1);
    const HalfLatticePoint k = coset_point(ctx.model.d, h[1].parity);
    ModelParams m = ctx.model;
    m.theta = wrap_centered(h[1].theta.real() - k.dot(m.omega));
    return m;
}

double window_margin(const std::vector<ScaleState>& history) {
    double m = 0.0;
    for (const auto& st : history)
        if (st.blocks) m = std::max({m, st.blocks->radius_tilde(), st.blocks->radius_omega()});
    return m + 1.0;
}

GoodSetCheck verify_good_set(const Region& lambda, const std::vector<ScaleState>& history, const MsaContext& ctx) {
    GoodSetCheck out;
    if (history.empty()) throw Error("internal", "empty history");
    if (lambda.empty()) return out;
    if (!lambda[0].is_integer()) throw Error("parity-mismatch", "good sets live in Z^d");
    const double margin = window_margin(history);
    for (const auto& p : lambda)
        if (p.norm() + margin > static_cast<double>(ctx.window))
            throw Error("window-insufficient", "site " + pt(p) + " too close to the window edge", margin);
    const int s = history.back().s;

    for (int sp = 0; sp < s; ++sp) {
        const ScaleState& a = history[sp];
        const ScaleState& b = history[sp + 1];
        const double reach = b.blocks->radius_omega() + (a.blocks ? a.blocks->radius_tilde() : 0.0);
        for (const auto& kp : a.Q.resonant()) {
            const Region Bp = a.omega_tilde(kp);
            if (!Bp.subset_of(lambda)) continue;
            for (const auto& k : near(b.P, kp, reach)) {
                if (!Bp.subset_of(b.omega(k))) continue;
                if (!subset_translate(b.blocks->omega_tilde, k, lambda)) {
                    out.is_good = false;
                    out.clause = 1;
                    out.stage = sp;
                    out.site = kp;
                    out.block_centre = k;
                    out.detail = "stage-" + std::to_string(sp + 1) + " outer block at " + pt(k) +
                                 " is clipped although it swallows the stage-" + std::to_string(sp) +
                                 " block at " + pt(kp);
                    return out;
                }
            }
        }
    }
    const ScaleState& cur = history.back();
    for (const auto& k : cur.Q.resonant()) {
        const bool inside = cur.blocks ? subset_translate(cur.blocks->omega_tilde, k, lambda) : lambda.contains(k);
        if (inside) {
            out.is_good = false;
            out.clause = 2;
            out.stage = s;
            out.site = k;
            out.block_centre = k;
            out.detail = "resonant stage-" + std::to_string(s) + " block at " + pt(k) + " lies inside";
            return out;
        }
    }
    return out;
}

Region enlarge_region(const Region& seed, const std::vector<ScaleState>& history, const MsaContext& ctx) {
    if (history.empty()) throw Error("internal", "empty history");
    const int d = ctx.model.d;
    Region L = seed;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& st : history) {
            if (!st.blocks) continue;
            const double r = st.blocks->radius_tilde();
            auto [lo, hi] = L.bounding_box();
            // Centres whose block can reach the current bounding box.
            HalfLatticePoint mid(d);
            double half_extent = 0.0;
            for (int i = 0; i < d; ++i) {
                mid.set_doubled(i, (lo.doubled(i) + hi.doubled(i)) / 2);
                half_extent = std::max(half_extent, 0.5 * static_cast<double>(hi.doubled(i) - lo.doubled(i)) / 2.0);
            }
            for (const auto& k : near(st.P, mid, half_extent + r + 1.0)) {
                if (!intersects_translate(st.blocks->omega_tilde, k, L)) continue;
                if (subset_translate(st.blocks->omega_tilde, k, L)) continue;
                L = L.united(st.blocks->omega_tilde.translated(k));
                changed = true;
            }
        }
    }
    const double collar = 50.0 * std::pow(static_cast<double>(history.back().N), ctx.scale.c * ctx.scale.c);
    for (const auto& p : L)
        if (dist(p, seed) > collar + 1e-9)
            throw Error("collar-overflow", "enlarged region leaves the collar at " + pt(p), collar);
    return L;
}

BoundReport check_bounds(const Region& lambda, const std::vector<ScaleState>& history, const MsaContext& ctx) {
    if (history.empty()) throw Error("internal", "empty history");
    BoundReport rep;
    const ScaleState& cur = history.back();
    rep.s = cur.s;
    OperatorInstance T = assemble_T(lambda, ctx.model);
    GreensFunction G = invert(T);
    rep.norm = G.op_norm;
    if (cur.s == 0) {
        rep.norm_bound = rep.norm_bound_coarse = std::exp(-2.0 * cur.log_delta);
        rep.decay_radius = 0.0;
    } else {
        const ScaleState& prev = history[cur.s - 1];
        rep.norm_bound_coarse = std::exp(-3.0 * cur.log_delta);
        double sup = 0.0;
        bool any = false;
        for (const auto& k : cur.P) {
            if (!subset_translate(cur.blocks->omega_tilde, k, lambda)) continue;
            const double a = orbit_phase(ctx.model, k);
            const double f = torus_norm(std::complex<double>(a) - cur.theta) * torus_norm(std::complex<double>(a) + cur.theta);
            sup = std::max(sup, 1.0 / f);
            any = true;
        }
        rep.norm_bound = any ? std::exp(-3.0 * prev.log_delta) * sup : rep.norm_bound_coarse;
        rep.decay_radius = std::pow(static_cast<double>(cur.N), std::pow(ctx.scale.c, 3));
    }
    rep.norm_margin = std::log(rep.norm_bound) - std::log(rep.norm);
    rep.decay_rate = cur.gamma_rate;
    rep.decay_margin = kInf;
    for (std::size_t i = 0; i < lambda.size(); ++i)
        for (std::size_t j = 0; j < lambda.size(); ++j) {
            if (sup_distance(lambda[i], lambda[j]) <= rep.decay_radius || i == j) continue;
            ++rep.decay_pairs;
            const double g = std::abs(G.entries(i, j));
            if (g == 0.0) continue;
            rep.decay_margin = std::min(rep.decay_margin, -std::log(g) - rep.decay_rate * l1_distance(lambda[i], lambda[j]));
        }
    rep.pass = rep.norm_margin >= 0 && rep.decay_margin >= 0;
    return rep;
}

namespace {

struct Checker {
    std::vector<InvariantResult>& out;
    InvariantResult cur;

    void begin(std::string name) { cur = InvariantResult{std::move(name), true, 0, ""}; }
    void expect(bool ok, const std::function<std::string()>& why) {
        ++cur.checked;
        if (!ok && cur.pass) {
            cur.pass = false;
            cur.detail = why();
        }
    }
    void end() { out.push_back(cur); }
};

bool interior(const HalfLatticePoint& k, double margin, long window) {
    return k.norm() + margin <= static_cast<double>(window);
}

}  // namespace

std::vector<InvariantResult> check_invariants(const std::vector<ScaleState>& history, const MsaContext& ctx) {
    std::vector<InvariantResult> results;
    Checker ck{results, {}};
    const int d = ctx.model.d;
    const double c = ctx.scale.c;
    const double margin = 2.0 * window_margin(history);
    const double root_tol = 1e-10;

    for (std::size_t si = 1; si < history.size(); ++si) {
        const ScaleState& st = history[si];
        const ScaleState& prev = history[si - 1];
        const int s = st.s;
        const std::string tag = "[" + std::to_string(s) + "]";
        const BlockTemplate& B = *st.blocks;
        const CaseTag how = st.case_history.back();

        ck.begin("coset" + tag);
        HalfLatticePoint half_sum = HalfLatticePoint::origin(d);
        for (const auto& l : st.shifts) half_sum = half_sum + l.half();
        for (const auto& k : st.P)
            ck.expect(k.parity() == half_sum.parity(), [&] { return pt(k) + " outside Z^d + sum(l)/2"; });
        ck.end();

        ck.begin("membership" + tag);
        for (const auto& k : st.P) {
            const double a = orbit_phase(ctx.model, k);
            if (how == CaseTag::C1) {
                const double m = std::min(torus_norm(std::complex<double>(a) - prev.theta),
                                          torus_norm(std::complex<double>(a) + prev.theta));
                ck.expect(m < prev.delta, [&] { return pt(k) + " not resonant at the previous stage"; });
            } else {
                const double bound = 3.0 * std::exp(ctx.scale.effective_tilde_exponent() * prev.log_delta);
                const double centre = st.root->centre.real();
                ck.expect(torus_norm(a - centre) < bound, [&] { return pt(k) + " far from the C2 centre"; });
            }
        }
        ck.end();

        ck.begin("template-symmetry" + tag);
        const HalfLatticePoint zero = HalfLatticePoint::origin(d);
        ck.expect(B.omega.symmetric_about(zero), [] { return std::string("inner block not symmetric"); });
        ck.expect(B.omega_tilde.symmetric_about(zero), [] { return std::string("outer block not symmetric"); });
        ck.expect(B.A.symmetric_about(zero), [] { return std::string("A not symmetric"); });
        ck.expect(B.A.subset_of(B.omega), [] { return std::string("A not inside the inner block"); });
        ck.expect(B.A.size() <= (std::size_t{1} << s), [&] { return "#A = " + std::to_string(B.A.size()); });
        // Rebuilding the closure from another centre must give the same shape.
        if (st.P.size() > 1 && prev.selection) {
            std::vector<ScaleState> upto(history.begin(), history.begin() + si);
            const BlockTemplate other = build_blocks_at(upto, st.P, *prev.selection, st.N, ctx, st.P.back());
            ck.expect(other.omega == B.omega && other.omega_tilde == B.omega_tilde,
                      [&] { return "closure from " + pt(st.P.back()) + " differs"; });
        }
        ck.end();

        ck.begin("sandwich" + tag);
        {
            const double prevN = std::pow(static_cast<double>(prev.N), c * c);
            const double Ns = static_cast<double>(st.N);
            const double ri = how == CaseTag::C1 ? Ns : ctx.scale.effective_case_factor() * std::pow(Ns, c);
            const double ro = how == CaseTag::C1 ? std::pow(Ns, c) : std::pow(Ns, c * c);
            const double extra = 50.0 * prevN;
            auto cube = [&](double r) { return Region::cube(d, r, zero, st.parity); };
            ck.expect(cube(ri).subset_of(B.omega), [] { return std::string("inner block below its lower cube"); });
            ck.expect(B.omega.subset_of(cube(ri + extra)), [] { return std::string("inner block above its upper cube"); });
            ck.expect(cube(ro).subset_of(B.omega_tilde), [] { return std::string("outer block below its lower cube"); });
            ck.expect(B.omega_tilde.subset_of(cube(ro + extra)),
                      [] { return std::string("outer block above its upper cube"); });
            ck.expect(B.omega.subset_of(B.omega_tilde), [] { return std::string("inner block not inside outer"); });
        }
        ck.end();

        ck.begin("separation" + tag);
        {
            const double diam = B.omega_tilde.diam();
            const double reach = 2.0 * B.radius_tilde() + 10.0 * diam + 1.0;
            for (const auto& k : st.P) {
                if (!interior(k, margin, ctx.window)) continue;
                const Region Bk = st.omega_tilde(k);
                for (const auto& kp : near(st.P, k, reach)) {
                    if (kp == k) continue;
                    const double dd = dist(Bk, st.omega_tilde(kp));
                    ck.expect(dd > 10.0 * diam, [&] {
                        return "blocks at " + pt(k) + " and " + pt(kp) + " only " + std::to_string(dd) + " apart";
                    });
                }
            }
        }
        ck.end();

        ck.begin("nesting" + tag);
        for (int sp = 1; sp < s; ++sp) {
            const ScaleState& old = history[sp];
            const double reach = std::max(B.radius_omega(), B.radius_tilde()) + old.blocks->radius_tilde() + 1.0;
            for (const auto& k : st.P) {
                if (!interior(k, margin, ctx.window)) continue;
                const Region Ok = st.omega(k), Tk = st.omega_tilde(k);
                for (const auto& kp : near(old.P, k, reach)) {
                    for (const Region* big : {&Ok, &Tk}) {
                        if (!intersects_translate(old.blocks->omega_tilde, kp, *big)) continue;
                        ck.expect(subset_translate(old.blocks->omega_tilde, kp, *big), [&] {
                            return "stage-" + std::to_string(sp) + " block at " + pt(kp) + " cut by block at " + pt(k);
                        });
                    }
                }
            }
        }
        ck.end();

        ck.begin("covering" + tag);
        {
            const double reach = B.radius_omega() + 1.0;
            for (const auto& kp : prev.Q.resonant()) {
                if (!interior(kp, margin, ctx.window)) continue;
                const Region Bp = prev.omega_tilde(kp);
                bool covered = false;
                for (const auto& k : near(st.P, kp, reach))
                    if (Bp.subset_of(st.omega(k))) {
                        covered = true;
                        break;
                    }
                ck.expect(covered, [&] { return "resonant site " + pt(kp) + " not covered"; });
            }
        }
        ck.end();

        ck.begin("containment" + tag);
        {
            const double thr = 10.0 * std::exp(ctx.scale.effective_tilde_exponent() * st.log_delta);
            const Region cls = Region::cube(d, static_cast<double>(ctx.window) - margin, zero, st.parity);
            for (const auto& k : cls) {
                const double a = orbit_phase(ctx.model, k);
                const double m = std::min(torus_norm(std::complex<double>(a) - st.theta),
                                          torus_norm(std::complex<double>(a) + st.theta));
                if (m < thr) ck.expect(st.in_P(k), [&] { return pt(k) + " near resonance but not in P"; });
            }
        }
        ck.end();

        ck.begin("good-block" + tag);
        {
            std::vector<ScaleState> upto(history.begin(), history.begin() + si);
            for (const auto& k : st.P) {
                if (!interior(k, margin, ctx.window)) continue;
                const Region R = st.omega_tilde(k).minus(st.A(k));
                auto g = verify_good_set(R, upto, ctx);
                ck.expect(g.is_good, [&] { return "outer block at " + pt(k) + " minus A: " + g.detail; });
            }
        }
        ck.end();

        ck.begin("root-symmetry" + tag);
        ck.expect(st.root->asymmetry <= root_tol,
                  [&] { return "asymmetry " + std::to_string(st.root->asymmetry); });
        ck.end();
    }
    return results;
}

std::vector<SampledBound> sample_bound_checks(const std::vector<ScaleState>& history, const MsaContext& ctx,
                                              int count, unsigned seed, std::size_t max_sites,
                                              std::size_t* skipped_singular) {
    std::vector<SampledBound> out;
    if (skipped_singular) *skipped_singular = 0;
    const int d = ctx.model.d;
    const double lim = static_cast<double>(ctx.window) - 2.0 * window_margin(history) - 8.0;
    if (lim < 0) throw Error("window-insufficient", "window too small to sample regions", lim);
    std::mt19937 rng(seed);
    std::uniform_int_distribution<long> ux(-static_cast<long>(lim), static_cast<long>(lim)), ur(2, 8);
    for (int attempt = 0; attempt < 200 * count && static_cast<int>(out.size()) < count; ++attempt) {
        std::vector<std::int64_t> x(d);
        for (auto& v : x) v = ux(rng);
        // Every other seed lands next to a current-stage block so the sharp bound gets exercised.
        const auto& P = history.back().P;
        if (attempt % 2 == 0 && !P.empty() && history.back().blocks) {
            std::uniform_int_distribution<std::size_t> up(0, P.size() - 1);
            std::uniform_int_distribution<long> jig(-4, 4);
            const auto& k = P[up(rng)];
            for (int i = 0; i < d; ++i) x[i] = static_cast<std::int64_t>(std::floor(k.coord(i))) + jig(rng);
        }
        bool inside = true;
        for (auto v : x) inside = inside && std::abs(static_cast<double>(v)) <= lim;
        if (!inside) continue;
        Region seed_region = Region::cube(d, static_cast<double>(ur(rng)), HalfLatticePoint::integer(x));
        Region L;
        try {
            L = enlarge_region(seed_region, history, ctx);
            if (L.size() > max_sites || !verify_good_set(L, history, ctx).is_good) continue;
        } catch (const Error& e) {
            if (e.code() == "collar-overflow" || e.code() == "window-insufficient") continue;
            throw;
        }
        try {
            out.push_back({seed_region, L, check_bounds(L, history, ctx)});
        } catch (const Error& e) {
            if (e.code() != "near-singular") throw;
            if (skipped_singular) ++*skipped_singular;
        }
    }
    return out;
}

DeterminantBand stage1_determinant_band(const std::vector<ScaleState>& history, const MsaContext& ctx, int samples,
                                        unsigned seed) {
    if (history.size() < 2) throw Error("internal", "stage 1 not built");
    const ScaleState& st = history[1];
    const BlockTemplate& B = *st.blocks;
    std::vector<std::size_t> keep;
    for (const auto& a : B.A) keep.push_back(static_cast<std::size_t>(B.omega_tilde.index_of(a)));
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DeterminantBand band;
    band.min_ratio = kInf;
    for (int i = 0; i < samples; ++i) {
        const std::complex<double> z =
            st.root->centre + std::polar(st.root->radius * std::sqrt(u(rng)), kTwoPi * u(rng));
        auto S = schur_complement(complexified_T(B.omega_tilde, ctx.model, z), keep);
        const double denom = torus_norm(z - st.theta) * torus_norm(z + st.theta);
        const double ratio = std::exp(S.det_S.log_abs) / denom;
        band.min_ratio = std::min(band.min_ratio, ratio);
        band.max_ratio = std::max(band.max_ratio, ratio);
        ++band.samples;
    }
    band.constant = history[0].delta * band.max_ratio / band.min_ratio;
    return band;
}

}  // namespace qp
