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

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "qp/lattice.hpp"
#include "qp/operator.hpp"

namespace qp {

enum class ScheduleMode { theoretical, practical };
enum class CaseTag { C1, C2 };

const char* to_string(ScheduleMode m);
const char* to_string(CaseTag c);

struct ScaleParams {
    double eps = 1e-3;
    /// Overrides log(eps) in the schedule, for couplings below double range.
    std::optional<double> log_eps;
    double tau = 0.5;
    double gamma = 0.1;
    double c = 1.03;
    ScheduleMode mode = ScheduleMode::theoretical;

    // Practical-mode overrides; ignored in theoretical mode.
    double kappa = 3.0;            // delta_{s+1} = delta_s^kappa
    double rho = 2.0;              // N_{s+1} = ceil(N_s^rho)
    long n1 = 0;                   // 0: theoretical formula, clamped >= 1
    double delta0 = 0.0;           // 0: eps^{1/10}
    double tilde_exponent = 0.5;   // outer threshold delta_s^tilde_exponent
    double case_factor = 100.0;    // C1 iff dist > case_factor * N_{s+1}^c

    double log_coupling() const { return log_eps ? *log_eps : std::log(eps); }
    double log_delta0() const;
    double effective_tilde_exponent() const { return mode == ScheduleMode::theoretical ? 0.01 : tilde_exponent; }
    double effective_case_factor() const { return mode == ScheduleMode::theoretical ? 100.0 : case_factor; }
    /// Throws "c-constraint" (theoretical) or "invalid-scale" on bad values.
    void validate() const;
};

struct ScheduleEntry {
    int s = 0;
    double log_delta = 0.0;
    double delta = 0.0;       // 0 once it underflows
    double N = 0.0;           // N_0 = 0 by convention
    double gamma_rate = 0.0;
    bool symbolic = false;    // delta or N not representable
};

struct Schedule {
    std::vector<ScheduleEntry> entries;
    double gamma_floor = 0.0;         // |log eps| / 4
    bool gamma_decreasing = true;
    bool gamma_above_floor = true;
};

Schedule schedule(const ScaleParams& params, int s_max);

struct TaggedSite {
    HalfLatticePoint k;
    double distance = 0.0;  // ||theta + k.omega -+ theta_s||
};

/// Q_s^{+-} (threshold delta_s) and the outer sets (threshold delta_s^tilde).
struct SiteSets {
    std::vector<TaggedSite> plus, minus, tilde_plus, tilde_minus;
    /// Smallest |distance - threshold| over P_s; how far the classification is from flipping.
    double min_margin = 0.0;

    std::vector<HalfLatticePoint> resonant() const;  // Q_s = Q^+ u Q^-, sorted
};

/// Block shapes relative to their centre: Omega_k = k + omega etc.
struct BlockTemplate {
    Region omega, omega_tilde, A;
    double radius_omega() const;
    double radius_tilde() const;
};

struct CaseSelection {
    CaseTag tag = CaseTag::C1;
    HalfLatticePoint shift;  // l_s, zero for C1
    std::optional<std::pair<HalfLatticePoint, HalfLatticePoint>> pair;  // (i_s, j_s)
    double dist_tilde_minus_plus = 0.0;  // dist(Q~^-, Q^+), drives the case
    double dist_tilde_plus_minus = 0.0;  // dist(Q~^+, Q^-), reported only
    double threshold = 0.0;              // case_factor * N_{s+1}^c
};

struct RootResult {
    std::complex<double> theta;        // theta_{s+1}
    std::complex<double> partner;      // zero found near -theta_{s+1}
    double asymmetry = 0.0;            // |theta + partner| mod 1
    std::complex<double> centre;
    double radius = 0.0;
    double nominal_radius = 0.0;
    int count = 0;
    int samples = 0;
    int newton_iterations = 0;
    std::optional<std::complex<double>> z_next;  // C2 estimate (l_s/2).omega + theta_s
};

struct ScaleState {
    int s = 0;
    double log_delta = 0.0, delta = 0.0;
    long N = 0;
    double gamma_rate = 0.0;
    std::complex<double> theta;
    std::vector<HalfLatticePoint> shifts;  // l_0 .. l_{s-1}
    unsigned parity = 0;                   // coset of P_s
    std::vector<HalfLatticePoint> P;       // sorted
    SiteSets Q;
    std::optional<BlockTemplate> blocks;   // absent at s = 0 (single sites)
    std::vector<CaseTag> case_history;     // entry i: transition i -> i+1
    std::optional<CaseSelection> selection;  // transition s -> s+1, once selected
    std::optional<RootResult> root;        // how theta was obtained (s >= 1)

    bool in_P(const HalfLatticePoint& k) const;
    Region omega(const HalfLatticePoint& k) const;
    Region omega_tilde(const HalfLatticePoint& k) const;
    Region A(const HalfLatticePoint& k) const;
};

/// Everything a stage transition needs besides the states themselves.
struct MsaContext {
    ModelParams model;
    ScaleParams scale;
    Schedule sched;
    long window = 0;  // P_0 = Lambda_window(0)
};

MsaContext make_context(const ModelParams& model, const ScaleParams& scale, long window, int s_max);

/// theta_0 = arccos(E)/2pi, P_0 = window, Q_0 classified. "energy-out-of-range" for |E| > 2.
ScaleState init_stage0(const MsaContext& ctx);

SiteSets classify_sites(const ScaleState& state, const MsaContext& ctx);

/// Needs state.Q; N_next = N_{s+1}.
CaseSelection select_case(const ScaleState& state, long N_next, const MsaContext& ctx);

/// Returns P_{s+1} (sorted) and its parity.
std::pair<std::vector<HalfLatticePoint>, unsigned> build_next_sites(const ScaleState& state,
                                                                    const CaseSelection& sel);

/// Block shapes for stage s+1 via the enlargement closure around k0 = first element of P_next.
/// history = states 0..s. Throws "closure-overflow".
BlockTemplate build_blocks(const std::vector<ScaleState>& history, const std::vector<HalfLatticePoint>& P_next,
                           const CaseSelection& sel, long N_next, const MsaContext& ctx);

/// Zeros of det M_{s+1}(z) on the block template, near theta_s (C1) or 0 / 1/2 (C2).
/// Throws "root-count" or "root-refine".
RootResult track_theta(const ScaleState& state, const BlockTemplate& next, const CaseSelection& sel,
                       const MsaContext& ctx);

/// Runs the transition s -> s+1 and appends the sealed state.
void advance(std::vector<ScaleState>& history, const MsaContext& ctx);

/// Stage 0 followed by `stages` transitions.
std::vector<ScaleState> run_msa(const MsaContext& ctx, int stages);

/// Model with theta moved so that the coset representative of P_1 sits exactly on the stage-1 phase
/// (theta + k.omega = Re theta_1). The stage-1 phase depends on theta only through the case and shift.
ModelParams plant_stage1_resonance(const MsaContext& ctx);

struct GoodSetCheck {
    bool is_good = true;
    int clause = 0;  // 1 or 2 when not good
    int stage = 0;
    HalfLatticePoint site, block_centre;
    std::string detail;
};

/// Margin from the window edge that decisions about Lambda at stage s need.
double window_margin(const std::vector<ScaleState>& history);

/// history = states 0..s. Throws "window-insufficient".
GoodSetCheck verify_good_set(const Region& lambda, const std::vector<ScaleState>& history, const MsaContext& ctx);

/// Greedy absorption of touching outer blocks of stages 1..s. Throws "collar-overflow".
Region enlarge_region(const Region& seed, const std::vector<ScaleState>& history, const MsaContext& ctx);

struct BoundReport {
    int s = 0;
    double norm = 0.0;          // ||T_Lambda^{-1}||
    double norm_bound = 0.0;    // a-priori bound used
    double norm_bound_coarse = 0.0;  // delta_s^{-3}, or delta_0^{-2} at s = 0
    double norm_margin = 0.0;   // log(bound / norm)
    double decay_rate = 0.0;    // gamma_s
    double decay_radius = 0.0;  // pairs with ||x-y|| above this are checked
    double decay_margin = 0.0;  // min of -log|G| - gamma ||x-y||_1, +inf if no pair
    std::size_t decay_pairs = 0;
    bool pass = false;
};

BoundReport check_bounds(const Region& lambda, const std::vector<ScaleState>& history, const MsaContext& ctx);

struct InvariantResult {
    std::string name;
    bool pass = true;
    std::size_t checked = 0;
    std::string detail;  // first failure
};

/// All per-stage invariants on sites at least window_margin from the edge.
std::vector<InvariantResult> check_invariants(const std::vector<ScaleState>& history, const MsaContext& ctx);

/// |det S_1(z)| / (||z - theta_1|| ||z + theta_1||) over `samples` points of the stage-1 disc.
struct DeterminantBand {
    double min_ratio = 0.0, max_ratio = 0.0;
    double constant = 0.0;  // delta_0 * max/min
    int samples = 0;
};

struct SampledBound {
    Region seed, region;
    BoundReport report;
};

/// Random cubes (radius 2..8) inside the usable window, enlarged and kept when s-good for
/// s = history.back().s. Returns fewer than `count` if the attempts run out.
/// Regions whose operator is singular at working precision cannot be certified and are
/// skipped; their number goes to `skipped_singular`.
std::vector<SampledBound> sample_bound_checks(const std::vector<ScaleState>& history, const MsaContext& ctx,
                                              int count, unsigned seed, std::size_t max_sites = 1500,
                                              std::size_t* skipped_singular = nullptr);

DeterminantBand stage1_determinant_band(const std::vector<ScaleState>& history, const MsaContext& ctx,
                                        int samples = 50, unsigned seed = 1);

}  // namespace qp
