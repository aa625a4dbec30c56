#pragma once

// Gaussian states with vanishing x-p cross correlations.
//
// The full 2N x 2N covariance matrix of such a state is block diagonal in the
// (x_1..x_N, p_1..p_N) ordering, so it is stored as two symmetric N x N blocks.
// Vacuum has variance 1/2 in both quadratures. Every map below takes the state
// by value and returns the transformed state; callers that own the state can
// move it through (`s = apply_uniform_loss(std::move(s), L)`) to avoid copies.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "cimsim/errors.hpp"

namespace cim {

using Index = Eigen::Index;

inline constexpr double kVacuumVariance = 0.5;
/// Smallest measured variance accepted by homodyne conditioning.
inline constexpr double kDegenerateVariance = 1e-15;
/// Slack on the uncertainty bound nu >= 1/2.
inline constexpr double kPhysicalityTolerance = 1e-9;

enum class Quadrature { X, P };

inline const char* to_string(Quadrature q) { return q == Quadrature::X ? "X" : "P"; }

struct QuadState {
    Eigen::MatrixXd sigma_x;
    Eigen::MatrixXd sigma_p;
    Eigen::VectorXd mean_x;
    Eigen::VectorXd mean_p;

    Index n_modes() const noexcept { return sigma_x.rows(); }

    const Eigen::MatrixXd& block(Quadrature q) const noexcept {
        return q == Quadrature::X ? sigma_x : sigma_p;
    }
    Eigen::MatrixXd& block(Quadrature q) noexcept { return q == Quadrature::X ? sigma_x : sigma_p; }
    const Eigen::VectorXd& mean(Quadrature q) const noexcept {
        return q == Quadrature::X ? mean_x : mean_p;
    }
    Eigen::VectorXd& mean(Quadrature q) noexcept { return q == Quadrature::X ? mean_x : mean_p; }
};

struct HomodyneOutcome {
    Index mode_index = 0;
    Quadrature quadrature = Quadrature::X;
    double value = 0.0;
    /// Variance of the measured quadrature just before the measurement.
    double conditional_variance = 0.0;
};

/// How the outcome of a homodyne measurement is chosen.
class OutcomePolicy {
public:
    enum class Kind { Sample, Fixed, Mean };

    /// Outcome m + sqrt(v) * z for a caller-supplied standard normal z.
    static OutcomePolicy sample(double standard_normal) { return {Kind::Sample, standard_normal}; }
    static OutcomePolicy fixed(double value) { return {Kind::Fixed, value}; }
    static OutcomePolicy mean() { return {Kind::Mean, 0.0}; }

    Kind kind() const noexcept { return kind_; }

    double resolve(double prior_mean, double variance) const noexcept {
        switch (kind_) {
            case Kind::Sample: return prior_mean + std::sqrt(variance) * param_;
            case Kind::Fixed: return param_;
            case Kind::Mean: break;
        }
        return prior_mean;
    }

private:
    OutcomePolicy(Kind k, double p) : kind_(k), param_(p) {}
    Kind kind_;
    double param_;
};

struct HomodyneResult {
    QuadState state;
    HomodyneOutcome outcome;
};

namespace detail {

inline void require_mode(const QuadState& s, Index k, const char* what) {
    if (k < 0 || k >= s.n_modes()) {
        throw IndexError(std::string(what) + ": mode index " + std::to_string(k) +
                         " out of range for " + std::to_string(s.n_modes()) + " modes");
    }
}

inline void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

// Congruence with the 2x2 real orthogonal mixer [[a, b], [c, d]] on rows/cols i, j.
inline void mix_rows_cols(Eigen::MatrixXd& m, Index i, Index j, double a, double b, double c, double d) {
    const Eigen::RowVectorXd ri = m.row(i);
    const Eigen::RowVectorXd rj = m.row(j);
    m.row(i) = a * ri + b * rj;
    m.row(j) = c * ri + d * rj;
    const Eigen::VectorXd ci = m.col(i);
    const Eigen::VectorXd cj = m.col(j);
    m.col(i) = a * ci + b * cj;
    m.col(j) = c * ci + d * cj;
    // Restore exact symmetry on the touched lines.
    m.row(i) = m.col(i).transpose();
    m.row(j) = m.col(j).transpose();
}

inline void scale_mode(Eigen::MatrixXd& m, Index k, double f) {
    m.row(k) *= f;
    m.col(k) *= f;
}

inline Eigen::MatrixXd remove_row_col(const Eigen::MatrixXd& m, Index k) {
    const Index n = m.rows();
    Eigen::MatrixXd out(n - 1, n - 1);
    const Index a = k;
    const Index b = n - k - 1;
    out.topLeftCorner(a, a) = m.topLeftCorner(a, a);
    out.topRightCorner(a, b) = m.topRightCorner(a, b);
    out.bottomLeftCorner(b, a) = m.bottomLeftCorner(b, a);
    out.bottomRightCorner(b, b) = m.bottomRightCorner(b, b);
    return out;
}

inline Eigen::VectorXd remove_entry(const Eigen::VectorXd& v, Index k) {
    const Index n = v.size();
    Eigen::VectorXd out(n - 1);
    out.head(k) = v.head(k);
    out.tail(n - k - 1) = v.tail(n - k - 1);
    return out;
}

}  // namespace detail

inline QuadState vacuum_state(Index n) {
    if (n < 1) throw InvalidParameter("vacuum_state: number of modes must be >= 1");
    QuadState s;
    s.sigma_x = Eigen::MatrixXd::Identity(n, n) * kVacuumVariance;
    s.sigma_p = Eigen::MatrixXd::Identity(n, n) * kVacuumVariance;
    s.mean_x = Eigen::VectorXd::Zero(n);
    s.mean_p = Eigen::VectorXd::Zero(n);
    return s;
}

/// x -> eta x, p -> p / eta on every mode.
inline QuadState apply_uniform_squeeze(QuadState s, double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidParameter("squeeze: eta must be > 0");
    s.sigma_x *= eta * eta;
    s.sigma_p /= eta * eta;
    s.mean_x *= eta;
    s.mean_p /= eta;
    return s;
}

inline QuadState apply_mode_squeeze(QuadState s, Index k, double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidParameter("squeeze: eta must be > 0");
    detail::require_mode(s, k, "squeeze");
    detail::scale_mode(s.sigma_x, k, eta);
    detail::scale_mode(s.sigma_p, k, 1.0 / eta);
    s.mean_x[k] *= eta;
    s.mean_p[k] /= eta;
    return s;
}

inline void require_loss(double loss) {
    if (!(loss >= 0.0 && loss < 1.0)) throw InvalidParameter("loss must lie in [0, 1)");
}

/// Pure-loss channel of the given reflectivity on every mode.
inline QuadState apply_uniform_loss(QuadState s, double loss) {
    require_loss(loss);
    const Index n = s.n_modes();
    const double keep = 1.0 - loss;
    s.sigma_x = keep * s.sigma_x + loss * kVacuumVariance * Eigen::MatrixXd::Identity(n, n);
    s.sigma_p = keep * s.sigma_p + loss * kVacuumVariance * Eigen::MatrixXd::Identity(n, n);
    s.mean_x *= std::sqrt(keep);
    s.mean_p *= std::sqrt(keep);
    return s;
}

inline QuadState apply_mode_loss(QuadState s, Index k, double loss) {
    require_loss(loss);
    detail::require_mode(s, k, "loss");
    const double amp = std::sqrt(1.0 - loss);
    for (auto* m : {&s.sigma_x, &s.sigma_p}) {
        detail::scale_mode(*m, k, amp);
        (*m)(k, k) += loss * kVacuumVariance;
    }
    s.mean_x[k] *= amp;
    s.mean_p[k] *= amp;
    return s;
}

/// Real beamsplitter between modes i and j.
///
/// Output i = sqrt(T) a_i + sqrt(1-T) a_j and output j = sqrt(1-T) a_i - sqrt(T) a_j,
/// applied identically to both quadratures. With a vacuum on port j this is the
/// tap a^i = sqrt(T) a + sqrt(1-T) v, a^o = sqrt(1-T) a - sqrt(T) v.
inline QuadState apply_two_mode_bs(QuadState s, Index i, Index j, double transmissivity) {
    detail::require_mode(s, i, "beamsplitter");
    detail::require_mode(s, j, "beamsplitter");
    if (i == j) throw IndexError("beamsplitter: modes must differ");
    if (!(transmissivity >= 0.0 && transmissivity <= 1.0)) {
        throw InvalidParameter("beamsplitter: transmissivity must lie in [0, 1]");
    }
    const double t = std::sqrt(transmissivity);
    const double r = std::sqrt(1.0 - transmissivity);
    detail::mix_rows_cols(s.sigma_x, i, j, t, r, r, -t);
    detail::mix_rows_cols(s.sigma_p, i, j, t, r, r, -t);
    for (auto* v : {&s.mean_x, &s.mean_p}) {
        const double a = (*v)[i];
        const double b = (*v)[j];
        (*v)[i] = t * a + r * b;
        (*v)[j] = r * a - t * b;
    }
    return s;
}

inline QuadState attach_vacuum(QuadState s, Index count) {
    if (count < 1) throw InvalidParameter("attach_vacuum: count must be >= 1");
    const Index n = s.n_modes();
    for (auto* m : {&s.sigma_x, &s.sigma_p}) {
        Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(n + count, n + count);
        grown.topLeftCorner(n, n) = *m;
        grown.bottomRightCorner(count, count).diagonal().setConstant(kVacuumVariance);
        *m = std::move(grown);
    }
    for (auto* v : {&s.mean_x, &s.mean_p}) {
        v->conservativeResize(n + count);
        v->tail(count).setZero();
    }
    return s;
}

/// Partial trace over `modes` (any order, duplicates rejected).
inline QuadState discard_modes(QuadState s, std::span<const Index> modes) {
    if (modes.empty()) throw InvalidOperation("discard_modes: empty mode set");
    std::vector<Index> sorted(modes.begin(), modes.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw IndexError("discard_modes: duplicate mode index");
    }
    for (Index k : sorted) detail::require_mode(s, k, "discard_modes");
    if (static_cast<Index>(sorted.size()) >= s.n_modes()) {
        throw InvalidOperation("discard_modes: cannot discard every mode");
    }
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
        s.sigma_x = detail::remove_row_col(s.sigma_x, *it);
        s.sigma_p = detail::remove_row_col(s.sigma_p, *it);
        s.mean_x = detail::remove_entry(s.mean_x, *it);
        s.mean_p = detail::remove_entry(s.mean_p, *it);
    }
    return s;
}

inline QuadState discard_modes(QuadState s, std::initializer_list<Index> modes) {
    return discard_modes(std::move(s), std::span<const Index>(modes.begin(), modes.size()));
}

/// Ideal homodyne detection of one quadrature of `mode`, which is then removed.
///
/// The measured block gets the Schur-complement update
///   sigma' = sigma_rest - c c^T / v,   m' = m_rest + c (y - m_meas) / v,
/// where c is the covariance column of the measured quadrature. The conjugate
/// quadrature of the measured mode is traced out; since the blocks are
/// uncorrelated that leaves the other block untouched apart from the removal.
inline HomodyneResult condition_on_homodyne(QuadState s, Index mode, Quadrature q,
                                            const OutcomePolicy& policy) {
    detail::require_mode(s, mode, "homodyne");
    if (s.n_modes() < 2) throw InvalidOperation("homodyne: cannot measure the last remaining mode");
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
    detail::symmetrize(blk);

    HomodyneResult out{std::move(s), HomodyneOutcome{mode, q, y, v}};
    QuadState& r = out.state;
    r.sigma_x = detail::remove_row_col(r.sigma_x, mode);
    r.sigma_p = detail::remove_row_col(r.sigma_p, mode);
    r.mean_x = detail::remove_entry(r.mean_x, mode);
    r.mean_p = detail::remove_entry(r.mean_p, mode);
    return out;
}

/// pi phase shift on mode k: x_k -> -x_k, p_k -> -p_k.
inline QuadState apply_phase_flip(QuadState s, Index k) {
    detail::require_mode(s, k, "phase_flip");
    detail::scale_mode(s.sigma_x, k, -1.0);
    detail::scale_mode(s.sigma_p, k, -1.0);
    s.mean_x[k] = -s.mean_x[k];
    s.mean_p[k] = -s.mean_p[k];
    return s;
}

inline QuadState displace(QuadState s, Index k, double dx, double dp) {
    detail::require_mode(s, k, "displace");
    s.mean_x[k] += dx;
    s.mean_p[k] += dp;
    return s;
}

inline double max_asymmetry(const QuadState& s) {
    return std::max((s.sigma_x - s.sigma_x.transpose()).cwiseAbs().maxCoeff(),
                    (s.sigma_p - s.sigma_p.transpose()).cwiseAbs().maxCoeff());
}

/// Symplectic spectrum, ascending.
///
/// With no x-p correlations the spectrum is the square root of eig(sigma_x sigma_p).
/// The product is evaluated as L^T sigma_p L with sigma_x = L L^T, which is
/// symmetric and has the same eigenvalues.
inline std::vector<double> symplectic_eigenvalues(const QuadState& s) {
    Eigen::LLT<Eigen::MatrixXd> llt(s.sigma_x);
    if (llt.info() != Eigen::Success) throw PhysicalityError("sigma_x is not positive definite");
    Eigen::LLT<Eigen::MatrixXd> llt_p(s.sigma_p);
    if (llt_p.info() != Eigen::Success) throw PhysicalityError("sigma_p is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    Eigen::MatrixXd prod = L.transpose() * s.sigma_p * L;
    detail::symmetrize(prod);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prod, Eigen::EigenvaluesOnly);
    std::vector<double> nu(static_cast<std::size_t>(prod.rows()));
    for (Index i = 0; i < prod.rows(); ++i) nu[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, es.eigenvalues()[i]));
    std::sort(nu.begin(), nu.end());
    return nu;
}

inline bool is_physical(const QuadState& s, double tol = kPhysicalityTolerance) {
    try {
        const auto nu = symplectic_eigenvalues(s);
        return nu.front() >= kVacuumVariance - tol;
    } catch (const PhysicalityError&) {
        return false;
    }
}

}  // namespace cim
