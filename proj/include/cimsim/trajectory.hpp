#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "cimsim/analysis.hpp"
#include "cimsim/couplings.hpp"
#include "cimsim/quad_state.hpp"

namespace cim {

/// Variance level treated as divergence of the Gaussian model.
inline constexpr double kDivergenceGuard = 1e6;
/// Round-over-round change in K below which a run counts as stationary.
inline constexpr double kSteadyTolerance = 1e-10;

struct TrajectoryPoint {
    long round = 0;
    CharacteristicMoments moments;
    bool diverged = false;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    /// Pulse modes only (ancillas traced out), in the lab frame.
    QuadState final_state;
    long rounds_run = 0;
    bool diverged = false;
    std::optional<long> steady_round;
    CharacteristicMoments final_moments;
};

/// Moments of a lab-frame state produced on `ring`. Odd mode counts have no
/// characteristic moments and report NaN.
inline CharacteristicMoments ring_moments(const QuadState& pulses, const CouplingRing& ring) {
    if (pulses.n_modes() % 2 != 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan, nan, nan};
    }
    return entanglement_k(to_ferromagnetic_frame(pulses, ring));
}

inline bool exceeds_guard(const QuadState& pulses, const CharacteristicMoments& m) {
    auto bad = [](double v) { return !std::isfinite(v) || v > kDivergenceGuard; };
    if (pulses.sigma_x.diagonal().maxCoeff() > kDivergenceGuard) return true;
    if (pulses.sigma_p.diagonal().maxCoeff() > kDivergenceGuard) return true;
    if (!pulses.sigma_x.allFinite() || !pulses.sigma_p.allFinite()) return true;
    if (std::isnan(m.k_measure)) return false;  // odd N: only the diagonal is checked
    return bad(m.var_u_x) || bad(m.var_u_p) || bad(m.var_U_x) || bad(m.var_U_p);
}

/// Drives a round-trip functor and does the bookkeeping shared by all schemes:
/// periodic recording, steady-state detection and the divergence guard.
template <class Step, class Pulses>
Trajectory run_trajectory(Step&& step, Pulses&& pulses, const CouplingRing& ring, long n_rounds,
                          long record_every, bool stop_at_steady) {
    Trajectory tr;
    double prev_k = std::numeric_limits<double>::quiet_NaN();
    for (long r = 1; r <= n_rounds; ++r) {
        step(r);
        const QuadState p = pulses();
        const CharacteristicMoments m = ring_moments(p, ring);
        const bool div = exceeds_guard(p, m);
        tr.rounds_run = r;
        const bool last = r == n_rounds;
        if (!tr.steady_round && std::isfinite(prev_k) && std::abs(m.k_measure - prev_k) < kSteadyTolerance) {
            tr.steady_round = r;
        }
        const bool stop = div || last || (stop_at_steady && tr.steady_round);
        if (r % record_every == 0 || stop) tr.points.push_back({r, m, div});
        prev_k = m.k_measure;
        if (stop) {
            tr.diverged = div;
            tr.final_state = p;
            tr.final_moments = m;
            break;
        }
    }
    return tr;
}

}  // namespace cim
