#pragma once

// Measurement-feedback coupling (scheme B).
//
// Every pair (k, k+1) gets its own out-coupling: both pulses are tapped with
// transmissivity T_B, the taps are mixed on a 50/50 beamsplitter and the two
// outputs are homodyned, X on one and P on the other as selected by s_k. Each
// pulse is therefore tapped twice per round trip.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cimsim/couplings.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/quad_state.hpp"
#include "cimsim/rng.hpp"
#include "cimsim/scheme_delay.hpp"
#include "cimsim/trajectory.hpp"

namespace cim {

/// When the lossy gain section of a pulse runs relative to the pair
/// measurements.
enum class PairOrder {
    /// Pulse k+1 passes the gain section right before pair (k, k+1) is
    /// measured, as in a time-multiplexed loop where the measurement station
    /// follows the crystal.
    Pipelined,
    /// All pulses pass the gain section, then pairs 0..N-1 are measured.
    Batched,
};

inline const char* to_string(PairOrder o) { return o == PairOrder::Pipelined ? "pipelined" : "batched"; }

inline PairOrder parse_pair_order(const std::string& s) {
    if (s == "pipelined") return PairOrder::Pipelined;
    if (s == "batched") return PairOrder::Batched;
    throw InvalidParameter("pair_order must be 'pipelined' or 'batched', got '" + s + "'");
}

struct SchemeBParams {
    Index n_modes = 0;
    double eta = 1.0;
    double t_b = 0.9;
    double loss_tot = 0.0;
    bool track_means = false;
    std::uint64_t seed = 0;
    PairOrder pair_order = PairOrder::Pipelined;
    /// Fraction of the measurement-induced mean shift undone by feedback.
    double feedback_gain = 1.0;

    double interface_loss() const { return 1.0 - std::sqrt(1.0 - loss_tot); }

    void validate() const {
        if (n_modes < 2) throw InvalidParameter("n_modes must be >= 2");
        if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidParameter("eta must be > 0");
        if (!(t_b > 0.0 && t_b <= 1.0)) throw InvalidParameter("t_bs must lie in (0, 1]");
        if (!(loss_tot >= 0.0 && loss_tot < 1.0)) throw InvalidParameter("loss_tot must lie in [0, 1)");
        if (!std::isfinite(feedback_gain)) throw InvalidParameter("feedback_gain must be finite");
    }
};

struct PairOutcomes {
    long round = 0;
    Index pair = 0;
    HomodyneOutcome x;
    HomodyneOutcome p;
};

/// Outcomes in measurement order: round-major, then pair index.
struct MeasurementRecord {
    std::vector<PairOutcomes> entries;

    /// The N entries of one round (1-based round number).
    std::span<const PairOutcomes> round(long r, Index n_pairs) const {
        const auto first = static_cast<std::size_t>((r - 1) * n_pairs);
        if (r < 1 || first + static_cast<std::size_t>(n_pairs) > entries.size()) {
            throw IndexError("measurement record has no round " + std::to_string(r));
        }
        return std::span<const PairOutcomes>(entries).subspan(first, static_cast<std::size_t>(n_pairs));
    }
};

namespace detail {

/// Conditions on quadrature q of `mode` without removing it; the caller is
/// expected to reset the mode afterwards.
inline HomodyneOutcome condition_in_place(QuadState& s, Index mode, Quadrature q, const OutcomePolicy& policy) {
    Eigen::MatrixXd& blk = s.block(q);
    Eigen::VectorXd& mu = s.mean(q);
    const double v = blk(mode, mode);
    if (!(v > kDegenerateVariance)) {
        throw DegenerateMeasurement("homodyne: measured variance " + std::to_string(v) +
                                    " is degenerate (over-conditioned state)");
    }
    const double prior = mu[mode];
    const double y = policy.resolve(prior, v);
    if (!std::isfinite(y)) throw InvalidParameter("homodyne: non-finite outcome");
    const Eigen::VectorXd c = blk.col(mode);
    blk.noalias() -= (c * c.transpose()) / v;
    mu += c * ((y - prior) / v);
    symmetrize(blk);
    return {mode, q, y, v};
}

/// Pair measurement with the two ancillas already present at anc_left and
/// anc_right (their prior content is discarded).
inline std::pair<HomodyneOutcome, HomodyneOutcome> pair_measure(QuadState& s, Index left, Index right, int s_k,
                                                                 double t_b, Index anc_left, Index anc_right,
                                                                 const OutcomePolicy& px, const OutcomePolicy& pp) {
    s = reset_to_vacuum(std::move(s), anc_left);
    s = reset_to_vacuum(std::move(s), anc_right);
    s = apply_two_mode_bs(std::move(s), left, anc_left, t_b);
    s = apply_two_mode_bs(std::move(s), right, anc_right, t_b);
    // Port anc_left carries (o_k + o_k+1)/sqrt2, port anc_right (o_k - o_k+1)/sqrt2.
    s = apply_two_mode_bs(std::move(s), anc_left, anc_right, 0.5);
    const Index minus = anc_left;
    const Index plus = anc_right;
    const Index mx = s_k == 1 ? plus : minus;
    const Index mp = s_k == 1 ? minus : plus;
    HomodyneOutcome ox = condition_in_place(s, mx, Quadrature::X, px);
    HomodyneOutcome op = condition_in_place(s, mp, Quadrature::P, pp);
    s = reset_to_vacuum(std::move(s), anc_left);
    s = reset_to_vacuum(std::move(s), anc_right);
    return {ox, op};
}

}  // namespace detail

struct PairStepResult {
    QuadState state;
    HomodyneOutcome x;
    HomodyneOutcome p;
};

/// Couples modes k and k+1 (mod N) through one out-coupled pair measurement.
/// The reported mode indices of the outcomes refer to the ancillas N and N+1.
inline PairStepResult pair_step(QuadState s, Index k, int s_k, double t_b, const OutcomePolicy& px,
                                const OutcomePolicy& pp) {
    const Index n = s.n_modes();
    detail::require_mode(s, k, "pair_step");
    if (n < 2) throw InvalidOperation("pair_step: needs at least 2 modes");
    if (s_k != 1 && s_k != -1) throw InvalidParameter("pair_step: coupling sign must be +1 or -1");
    if (!(t_b > 0.0 && t_b <= 1.0)) throw InvalidParameter("pair_step: t_bs must lie in (0, 1]");
    s = attach_vacuum(std::move(s), 2);
    auto [ox, op] = detail::pair_measure(s, k, (k + 1) % n, s_k, t_b, n, n + 1, px, pp);
    return {discard_modes(std::move(s), {n, n + 1}), ox, op};
}

/// Pulses plus two ancilla slots (modes N and N+1) reused by every pair.
struct FeedbackLoop {
    QuadState state;
    Index n_pulses = 0;

    static FeedbackLoop vacuum(Index n) { return {vacuum_state(n + 2), n}; }

    QuadState pulses() const { return discard_modes(state, {n_pulses, n_pulses + 1}); }
};

/// One round trip. `round` keys the outcome draws; outcomes are appended to
/// `record` when it is non-null.
inline FeedbackLoop round_trip_b(FeedbackLoop loop, const SchemeBParams& p, const CouplingRing& ring, long round,
                                 MeasurementRecord* record = nullptr) {
    p.validate();
    const Index n = loop.n_pulses;
    if (ring.n_modes() != n || p.n_modes != n) throw InvalidParameter("round_trip_b: ring, params and state disagree on N");
    const double L = p.interface_loss();
    const NormalStream stream(p.seed);
    QuadState& s = loop.state;

    if (p.pair_order == PairOrder::Batched) {
        for (Index k = 0; k < n; ++k) s = gain_section(std::move(s), k, p.eta, L);
    }
    for (Index k = 0; k < n; ++k) {
        const Index next = (k + 1) % n;
        if (p.pair_order == PairOrder::Pipelined) s = gain_section(std::move(s), next, p.eta, L);
        const auto r = static_cast<std::uint64_t>(round);
        const auto kk = static_cast<std::uint64_t>(k);
        const OutcomePolicy px = p.track_means ? OutcomePolicy::sample(stream.draw(r, kk, 0)) : OutcomePolicy::mean();
        const OutcomePolicy pp = p.track_means ? OutcomePolicy::sample(stream.draw(r, kk, 1)) : OutcomePolicy::mean();
        const Eigen::VectorXd before_x = s.mean_x.head(n);
        const Eigen::VectorXd before_p = s.mean_p.head(n);
        auto [ox, op] = detail::pair_measure(s, k, next, ring.sign(k), p.t_b, n, n + 1, px, pp);
        if (p.feedback_gain != 0.0) {
            s.mean_x.head(n) -= p.feedback_gain * (s.mean_x.head(n) - before_x);
            s.mean_p.head(n) -= p.feedback_gain * (s.mean_p.head(n) - before_p);
        }
        if (record) record->entries.push_back({round, k, ox, op});
    }
    return loop;
}

struct SchemeBRun {
    Trajectory trajectory;
    MeasurementRecord record;
};

inline constexpr long kSchemeBRoundCap = 10000;

inline SchemeBRun simulate_scheme_b(const SchemeBParams& p, const CouplingRing& ring, long n_rounds,
                                    long record_every = 1, bool stop_at_steady = false) {
    p.validate();
    if (n_rounds < 1) throw InvalidParameter("rounds must be >= 1");
    if (record_every < 1) throw InvalidParameter("record_every must be >= 1");
    if (ring.n_modes() != p.n_modes) throw InvalidParameter("ring size does not match n_modes");
    SchemeBRun run;
    FeedbackLoop loop = FeedbackLoop::vacuum(p.n_modes);
    MeasurementRecord* rec = p.track_means ? &run.record : nullptr;
    run.trajectory = run_trajectory([&](long r) { loop = round_trip_b(std::move(loop), p, ring, r, rec); },
                                    [&] { return loop.pulses(); }, ring, n_rounds, record_every, stop_at_steady);
    return run;
}

/// Linear estimate of the pulse x means from one round of x-type outcomes.
///
/// The measured X quadrature of pair k is sqrt(1 - T_B) (x_k - s_k x_k+1)/sqrt2,
/// so y_k = outcome / sqrt(1 - T_B) and x = M^-1 y.
inline Eigen::VectorXd infer_means(std::span<const PairOutcomes> round, const CouplingRing& ring, double t_b) {
    if (!ring.frustrated()) throw SingularMatrix("mean inference requires frustration (S* = -1)");
    const Index n = ring.n_modes();
    if (static_cast<Index>(round.size()) != n) throw InvalidParameter("infer_means: need exactly one outcome per pair");
    if (!(t_b >= 0.0 && t_b < 1.0)) throw InvalidParameter("infer_means: t_bs must lie in [0, 1)");
    Eigen::VectorXd y(n);
    const double scale = 1.0 / std::sqrt(1.0 - t_b);
    for (const PairOutcomes& e : round) {
        if (e.pair < 0 || e.pair >= n) throw IndexError("infer_means: pair index out of range");
        y[e.pair] = e.x.value * scale;
    }
    return invert_m(ring) * y;
}

/// Same inference on a raw y vector in the M normalisation.
inline Eigen::VectorXd infer_means(const Eigen::VectorXd& y, const CouplingRing& ring) {
    if (!ring.frustrated()) throw SingularMatrix("mean inference requires frustration (S* = -1)");
    if (y.size() != ring.n_modes()) throw InvalidParameter("infer_means: size mismatch");
    return invert_m(ring) * y;
}

}  // namespace cim
