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
#include "qp/ids.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include <lapacke.h>

#include "qp/error.hpp"

namespace qp {

namespace {

constexpr int kMaxJitterSteps = 8;

// Returns false when a pivot is below tol (count is then meaningless).
bool banded_negatives(const BandedSymmetric& H, double shift, double tol, std::size_t& negatives) {
    const std::size_t n = H.size(), bw = H.bandwidth();
    negatives = 0;
    if (bw == 1) {
        // Sturm recurrence.
        double dprev = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double di = H.lower(i, i) - shift;
            if (i > 0) {
                const double b = H.lower(i, i - 1);
                di -= b * b / dprev;
            }
            if (std::abs(di) < tol) return false;
            if (di < 0) ++negatives;
            dprev = di;
        }
        return true;
    }
    // L stored in band form, column-wise like H.
    BandedSymmetric L(n, bw);
    std::vector<double> D(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k0 = j > bw ? j - bw : 0;
        double dj = H.lower(j, j) - shift;
        for (std::size_t k = k0; k < j; ++k) dj -= L.lower(j, k) * L.lower(j, k) * D[k];
        if (std::abs(dj) < tol) return false;
        D[j] = dj;
        if (dj < 0) ++negatives;
        const std::size_t iend = std::min(n, j + bw + 1);
        for (std::size_t i = j + 1; i < iend; ++i) {
            double v = H.lower(i, j);
            const std::size_t kk = i > bw ? i - bw : 0;
            for (std::size_t k = std::max(k0, kk); k < j; ++k) v -= L.lower(i, k) * L.lower(j, k) * D[k];
            L.lower(i, j) = v / dj;
        }
    }
    return true;
}

bool dense_negatives(const Eigen::MatrixXd& H, double shift, double tol, std::size_t& negatives) {
    const lapack_int n = static_cast<lapack_int>(H.rows());
    Eigen::MatrixXd A = H;
    A.diagonal().array() -= shift;
    std::vector<lapack_int> ipiv(n);
    lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, A.data(), n, ipiv.data());
    if (info < 0) throw Error("lapack", "dsytrf argument error");
    negatives = 0;
    for (lapack_int k = 0; k < n;) {
        if (ipiv[k] > 0) {
            const double d = A(k, k);
            if (std::abs(d) < tol) return false;
            if (d < 0) ++negatives;
            ++k;
        } else {
            const double a = A(k, k), b = A(k + 1, k), c = A(k + 1, k + 1);
            const double det = a * c - b * b;
            if (std::abs(det) < tol * std::max({std::abs(a), std::abs(b), std::abs(c), tol})) return false;
            if (det < 0)
                negatives += 1;
            else if (a + c < 0)
                negatives += 2;
            k += 2;
        }
    }
    return true;
}

template <class Mat, class F>
CountResult count_with_jitter(const Mat& H, double E, double hnorm, F&& negs) {
    const double tol = std::numeric_limits<double>::epsilon() * std::max(hnorm, 1e-300);
    CountResult r;
    for (int step = 0; step <= kMaxJitterSteps; ++step) {
        const double jitter = step * 1e-12 * std::max(hnorm, 1.0);
        std::size_t neg = 0;
        if (negs(H, E + jitter, tol, neg)) {
            r.count = neg;
            r.jitter = jitter;
            return r;
        }
    }
    throw Error("singular-shift", "inertia count failed after jitter retries", E);
}

}  // namespace

CountResult count_leq(const Eigen::MatrixXd& H, double E) {
    if (H.rows() == 0) return {};
    const double hnorm = H.cwiseAbs().rowwise().sum().maxCoeff();
    return count_with_jitter(H, E, hnorm, dense_negatives);
}

CountResult count_leq(const BandedSymmetric& H, double E) {
    if (H.size() == 0) return {};
    return count_with_jitter(H, E, H.inf_norm(), banded_negatives);
}

CountResult count_geq(const BandedSymmetric& H, double E) {
    BandedSymmetric neg = H;
    for (std::size_t j = 0; j < H.size(); ++j)
        for (std::size_t i = j; i < std::min(H.size(), j + H.bandwidth() + 1); ++i) neg.lower(i, j) = -H.lower(i, j);
    return count_leq(neg, -E);
}

BandedSymmetric window_hamiltonian(int N, const ModelParams& params) {
    ModelParams p = params;
    p.energy = 0.0;
    return assemble_banded(Region::cube(params.d, N, HalfLatticePoint::origin(params.d)), p);
}

WindowCount ids_window(const BandedSymmetric& H, double E, double eta) {
    if (!(eta > 0.0)) throw Error("bad-eta", "window half-width must be positive", eta);
    WindowCount w;
    w.sites = H.size();
    const auto hi = count_leq(H, E + eta).count;
    const auto lo = count_leq(H, E - eta).count;
    w.count = hi - lo;
    w.density = static_cast<double>(w.count) / static_cast<double>(w.sites);
    return w;
}

WindowCount ids_window(int N, const ModelParams& params, double E, double eta) {
    return ids_window(window_hamiltonian(N, params), E, eta);
}

std::vector<double> normalize_etas(const std::vector<double>& etas, bool* changed) {
    std::vector<double> out = etas;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (changed) *changed = out != etas;
    return out;
}

double fit_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (y[i] > 0 && x[i] > 0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    if (lx.size() < 2) return std::numeric_limits<double>::infinity();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= lx.size();
    my /= lx.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0) return std::numeric_limits<double>::infinity();
    return sxy / sxx;
}

std::vector<double> stratified_thetas(int n) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = (i + 0.5) / n;
    return t;
}

IdsReport holder_scan(const IdsScan& scan) {
    if (scan.etas.empty() || scan.energies.empty() || scan.thetas.empty())
        throw Error("bad-scan", "IDS scan needs nonempty theta, energy and eta lists");
    const auto etas = normalize_etas(scan.etas);
    const std::size_t nt = scan.thetas.size(), ne = scan.energies.size(), nh = etas.size();
    IdsReport rep;
    rep.cells.resize(nt * ne * nh);
    std::vector<std::size_t> jit(nt, 0);
    std::vector<std::size_t> sites(nt, 0);

    auto work = [&](std::size_t t) {
        ModelParams p;
        p.d = scan.d;
        p.eps = scan.eps;
        p.omega = scan.omega;
        p.theta = scan.thetas[t];
        BandedSymmetric H = window_hamiltonian(scan.N, p);
        sites[t] = H.size();
        for (std::size_t e = 0; e < ne; ++e)
            for (std::size_t h = 0; h < nh; ++h) {
                const double E = scan.energies[e], eta = etas[h];
                auto hi = count_leq(H, E + eta), lo = count_leq(H, E - eta);
                if (hi.jitter != 0.0 || lo.jitter != 0.0) ++jit[t];
                IdsCell& c = rep.cells[(t * ne + e) * nh + h];
                c.theta = p.theta;
                c.energy = E;
                c.eta = eta;
                c.count = hi.count - lo.count;
                c.density = static_cast<double>(c.count) / static_cast<double>(H.size());
                c.bound = std::pow(eta, 0.5 - scan.mu);
                c.pass = c.density <= c.bound;
            }
    };
    const int threads = std::max(1, scan.threads);
    if (threads == 1) {
        for (std::size_t t = 0; t < nt; ++t) work(t);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex m;
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                while (true) {
                    std::size_t t;
                    {
                        std::lock_guard<std::mutex> lk(m);
                        if (next >= nt) return;
                        t = next++;
                    }
                    work(t);
                }
            });
        for (auto& th : pool) th.join();
    }
    rep.sites = sites.front();
    for (auto j : jit) rep.jittered += j;
    rep.worst_ratio = -1.0;
    for (const auto& c : rep.cells) {
        rep.all_pass = rep.all_pass && c.pass;
        const double ratio = c.density / c.bound;
        if (ratio > rep.worst_ratio) {
            rep.worst_ratio = ratio;
            rep.worst = c;
        }
    }
    rep.fitted_exponent.assign(ne, std::numeric_limits<double>::infinity());
    rep.min_exponent = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < ne; ++e) {
        std::vector<double> maxd(nh, 0.0);
        for (std::size_t t = 0; t < nt; ++t)
            for (std::size_t h = 0; h < nh; ++h) maxd[h] = std::max(maxd[h], rep.cells[(t * ne + e) * nh + h].density);
        rep.fitted_exponent[e] = fit_log_slope(etas, maxd);
        if (rep.fitted_exponent[e] < rep.min_exponent) {
            rep.min_exponent = rep.fitted_exponent[e];
            rep.min_exponent_energy = scan.energies[e];
        }
    }
    return rep;
}

}  // namespace qp
