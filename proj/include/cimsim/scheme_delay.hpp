#pragma once

// Delay-line coupling (scheme A).
//
// Exact sequential simulation: each pulse in turn sees loss-squeeze-loss, is
// tapped at BS1 into the delay line, and then absorbs the previous pulse's tap
// at BS2. The tap of the last pulse meets the first pulse of the next round.
//
// The effective model replaces the sequence by simultaneous operations and is
// exactly solvable for the characteristic moments.

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "cimsim/couplings.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/quad_state.hpp"
#include "cimsim/trajectory.hpp"

namespace cim {

struct SchemeAParams {
    Index n_modes = 0;
    double eta = 1.0;
    double t_a = 0.5;
    double loss_tot = 0.0;

    /// Reflectivity of each of the two loss beamsplitters around the crystal.
    double interface_loss() const { return 1.0 - std::sqrt(1.0 - loss_tot); }

    void validate() const {
        if (n_modes < 2) throw InvalidParameter("n_modes must be >= 2");
        if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidParameter("eta must be > 0");
        if (!(t_a >= 0.0 && t_a <= 1.0)) throw InvalidParameter("t_bs must lie in [0, 1]");
        if (!(loss_tot >= 0.0 && loss_tot < 1.0)) throw InvalidParameter("loss_tot must lie in [0, 1)");
    }
};

/// Resets mode k to vacuum (partial trace followed by a fresh vacuum input).
inline QuadState reset_to_vacuum(QuadState s, Index k) {
    detail::require_mode(s, k, "reset_to_vacuum");
    for (auto* m : {&s.sigma_x, &s.sigma_p}) {
        m->row(k).setZero();
        m->col(k).setZero();
        (*m)(k, k) = kVacuumVariance;
    }
    s.mean_x[k] = 0.0;
    s.mean_p[k] = 0.0;
    return s;
}

/// Loss L, squeeze eta, loss L on a single pulse.
inline QuadState gain_section(QuadState s, Index k, double eta, double interface_loss) {
    s = apply_mode_loss(std::move(s), k, interface_loss);
    s = apply_mode_squeeze(std::move(s), k, eta);
    return apply_mode_loss(std::move(s), k, interface_loss);
}

/// Pulses plus the delay line. Modes 0..N-1 are pulses; modes N and N+1 are
/// the delay register and a scratch ancilla, whose roles swap every pulse.
struct DelayLine {
    QuadState state;
    Index n_pulses = 0;
    Index register_mode = 0;

    static DelayLine vacuum(Index n) { return {vacuum_state(n + 2), n, n}; }

    Index scratch_mode() const noexcept { return register_mode == n_pulses ? n_pulses + 1 : n_pulses; }

    QuadState pulses() const { return discard_modes(state, {n_pulses, n_pulses + 1}); }
};

/// One round trip of the delay-line scheme.
inline DelayLine round_trip_a(DelayLine line, const SchemeAParams& p, const CouplingRing& ring) {
    p.validate();
    if (ring.n_modes() != line.n_pulses || p.n_modes != line.n_pulses) {
        throw InvalidParameter("round_trip_a: ring, params and state disagree on N");
    }
    const Index n = line.n_pulses;
    const double L = p.interface_loss();
    // T_A is the fraction sent into the delay line, so the pulse port keeps 1 - T_A.
    const double keep = 1.0 - p.t_a;
    QuadState s = std::move(line.state);
    for (Index k = 0; k < n; ++k) {
        s = gain_section(std::move(s), k, p.eta, L);
        const Index tap = line.scratch_mode();
        const Index reg = line.register_mode;
        // BS1: tap pulse k into a fresh vacuum ancilla.
        s = reset_to_vacuum(std::move(s), tap);
        s = apply_two_mode_bs(std::move(s), k, tap, keep);
        // The register holds the tap of pulse k-1; its parity phase is s_{k-1}.
        if (ring.sign((k + n - 1) % n) == -1) s = apply_phase_flip(std::move(s), reg);
        // BS2: pulse keeps sqrt(1-T) of itself plus sqrt(T) of the delayed tap.
        s = apply_two_mode_bs(std::move(s), k, reg, keep);
        line.register_mode = tap;
    }
    line.state = std::move(s);
    return line;
}

inline Trajectory simulate_scheme_a(const SchemeAParams& p, const CouplingRing& ring, long n_rounds,
                                    long record_every = 1, bool stop_at_steady = false) {
    p.validate();
    if (n_rounds < 1) throw InvalidParameter("rounds must be >= 1");
    if (record_every < 1) throw InvalidParameter("record_every must be >= 1");
    if (ring.n_modes() != p.n_modes) throw InvalidParameter("ring size does not match n_modes");
    DelayLine line = DelayLine::vacuum(p.n_modes);
    return run_trajectory([&](long) { line = round_trip_a(std::move(line), p, ring); },
                          [&] { return line.pulses(); }, ring, n_rounds, record_every, stop_at_steady);
}

/// Closed-form constants of the effective simultaneous model.
///
/// Each characteristic variance obeys v_{n+1} = f v_n + c with f one of the
/// geometric factors below, so v_n = w + f^n (1/2 - w) with w = c / (1 - f),
/// or v_n = 1/2 + n c when f = 1.
struct TransientModel {
    double xi_x = 0.0, xi_p = 0.0, chi_x = 0.0, chi_p = 0.0;
    // Asymptotic constants; NaN when the matching factor equals 1.
    double w_x = 0.0, w_p = 0.0, bigw_x = 0.0, bigw_p = 0.0;
    // Per-round growth when the matching factor equals 1.
    std::optional<double> linear_u_x, linear_u_p, linear_U_x, linear_U_p;
};

struct ModelVariances {
    double u_x = 0.0, u_p = 0.0, U_x = 0.0, U_p = 0.0;
};

inline constexpr double kUnitFactorTolerance = 1e-12;

inline TransientModel transient_model_a(const SchemeAParams& p) {
    p.validate();
    const double L = p.interface_loss();
    const double e2 = p.eta * p.eta;
    const double a = (2.0 * p.t_a - 1.0) * (2.0 * p.t_a - 1.0);
    const double mix = 2.0 * p.t_a * (1.0 - p.t_a);
    const double noise_x = e2 * L * (1.0 - L) + L;
    const double noise_p = L * (1.0 - L) / e2 + L;
    const double keep = (1.0 - L) * (1.0 - L);

    TransientModel m;
    m.xi_x = e2 * keep * a;
    m.xi_p = keep / e2;
    m.chi_x = e2 * keep;
    m.chi_p = keep / e2 * a;

    const double c_ux = 0.5 * a * noise_x + mix;
    const double c_up = 0.5 * noise_p;
    const double c_Ux = 0.5 * noise_x;
    const double c_Up = 0.5 * a * noise_p + mix;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto settle = [&](double f, double c, double& w, std::optional<double>& slope) {
        if (std::abs(f - 1.0) <= kUnitFactorTolerance) {
            w = nan;
            slope = c;
        } else {
            w = c / (1.0 - f);
        }
    };
    settle(m.xi_x, c_ux, m.w_x, m.linear_u_x);
    settle(m.xi_p, c_up, m.w_p, m.linear_u_p);
    settle(m.chi_x, c_Ux, m.bigw_x, m.linear_U_x);
    settle(m.chi_p, c_Up, m.bigw_p, m.linear_U_p);
    return m;
}

inline ModelVariances model_variances_at(const TransientModel& m, long n) {
    if (n < 0) throw InvalidParameter("model_variances_at: n must be >= 0");
    const double dn = static_cast<double>(n);
    auto eval = [&](double f, double w, const std::optional<double>& slope) {
        if (slope) return kVacuumVariance + dn * *slope;
        return w + std::pow(f, dn) * (kVacuumVariance - w);
    };
    return {eval(m.xi_x, m.w_x, m.linear_u_x), eval(m.xi_p, m.w_p, m.linear_u_p),
            eval(m.chi_x, m.bigw_x, m.linear_U_x), eval(m.chi_p, m.bigw_p, m.linear_U_p)};
}

/// Squeezing at which the collective x moment stops having a steady state.
inline double threshold_eta(double loss_tot) {
    if (!(loss_tot >= 0.0 && loss_tot < 1.0)) throw InvalidParameter("loss_tot must lie in [0, 1)");
    return 1.0 / std::sqrt(1.0 - loss_tot);
}

/// Steady-state K = 2 sqrt(w^x w^p) of the effective model.
inline double steady_state_k_a(const SchemeAParams& p) {
    const TransientModel m = transient_model_a(p);
    if (!(m.chi_x < 1.0)) {
        throw NoSteadyState("no steady state: eta " + std::to_string(p.eta) + " is at or above threshold " +
                            std::to_string(threshold_eta(p.loss_tot)));
    }
    if (!(m.xi_p < 1.0)) throw NoSteadyState("no steady state: p-quadrature moment does not settle");
    return 2.0 * std::sqrt(m.w_x * m.w_p);
}

/// Lower bound on the steady-state K of scheme A at a given loss, reached for
/// T_A = 1/2 as eta approaches threshold.
inline double optimal_k_a(double loss_tot) {
    if (!(loss_tot >= 0.0 && loss_tot < 1.0)) throw InvalidParameter("loss_tot must lie in [0, 1)");
    return std::sqrt(1.0 - std::sqrt(1.0 - loss_tot) / (2.0 - loss_tot));
}

}  // namespace cim
