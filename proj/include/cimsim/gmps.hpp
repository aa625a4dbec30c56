#pragma once

// Gaussian matrix product state reference (scheme C).
//
// N three-mode blocks (b1_k, b2_k, a_k) are glued into a ring by projecting
// every (b2_k, b1_k+1) onto a strongly squeezed EPR pair. The a modes are the
// output. Infinite squeezing is replaced by a finite ratio z.

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "cimsim/errors.hpp"
#include "cimsim/quad_state.hpp"

namespace cim {

struct GmpsParams {
    double s = 10.0;
    double r = 5.0;
    Index n_modes = 20;
    double epr_squeeze = 1e6;

    void validate() const {
        if (!(r >= 1.0)) throw PhysicalityError("gmps: r must be >= 1 (got " + std::to_string(r) + ")");
        if (!(s >= (r + 1.0) / 2.0)) {
            throw PhysicalityError("gmps: s must be >= (r + 1) / 2 (got s=" + std::to_string(s) + ")");
        }
        if (n_modes < 4 || n_modes % 2 != 0) throw InvalidParameter("gmps: n_modes must be even and >= 4");
        if (!(epr_squeeze >= 1.0) || !std::isfinite(epr_squeeze)) {
            throw InvalidParameter("gmps: epr_squeeze must be a finite value >= 1");
        }
    }
};

struct BuildingBlock {
    double t_plus = 0.0, t_minus = 0.0, u_plus = 0.0, u_minus = 0.0;
    /// Modes ordered b1, b2, a.
    Eigen::Matrix3d sigma_x;
    Eigen::Matrix3d sigma_p;
};

inline BuildingBlock building_block(double s, double r) {
    if (!(r >= 1.0)) throw PhysicalityError("building_block: r >= 1 violated");
    if (!(s >= (r + 1.0) / 2.0)) throw PhysicalityError("building_block: s >= (r + 1) / 2 violated");
    const double r2 = r * r;
    // Both radicands are nonnegative under the constraints above; clamp rounding.
    const double disc = std::max(0.0, 16.0 * s * s * s * s - 8.0 * s * s * (1.0 + r2) + (r2 - 1.0) * (r2 - 1.0));
    const double c = 0.25 * std::sqrt((r2 - 1.0) / (s * r));
    const double lo = std::sqrt(std::max(0.0, (r - 2.0 * s) * (r - 2.0 * s) - 1.0));
    const double hi = std::sqrt(std::max(0.0, (r + 2.0 * s) * (r + 2.0 * s) - 1.0));

    BuildingBlock b;
    b.t_plus = (r2 - 1.0 + std::sqrt(disc)) / (4.0 * s);
    b.t_minus = (r2 - 1.0 - std::sqrt(disc)) / (4.0 * s);
    b.u_plus = c * (lo + hi);
    b.u_minus = c * (lo - hi);
    b.sigma_x << s, b.t_plus, b.u_plus, b.t_plus, s, b.u_plus, b.u_plus, b.u_plus, r;
    b.sigma_p << s, b.t_minus, b.u_minus, b.t_minus, s, b.u_minus, b.u_minus, b.u_minus, r;
    b.sigma_x *= 0.5;
    b.sigma_p *= 0.5;
    return b;
}

/// Condition number above which the EPR projection is refused.
inline constexpr double kMaxConditionNumber = 1e14;

inline QuadState gmps_state(const GmpsParams& p) {
    p.validate();
    const BuildingBlock blk = building_block(p.s, p.r);
    const Index n = p.n_modes;
    const double z = p.epr_squeeze;
    const double diag = (z + 1.0 / z) / 4.0;
    const double off = (z - 1.0 / z) / 4.0;

    QuadState out;
    for (const Quadrature q : {Quadrature::X, Quadrature::P}) {
        const Eigen::Matrix3d& b = q == Quadrature::X ? blk.sigma_x : blk.sigma_p;
        // b modes: b1_k at 2k, b2_k at 2k+1.
        Eigen::MatrixXd sb = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        Eigen::MatrixXd sab = Eigen::MatrixXd::Zero(2 * n, n);
        Eigen::MatrixXd sa = Eigen::MatrixXd::Zero(n, n);
        for (Index k = 0; k < n; ++k) {
            sb.block<2, 2>(2 * k, 2 * k) = b.topLeftCorner<2, 2>();
            sab.block<2, 1>(2 * k, k) = b.topRightCorner<2, 1>();
            sa(k, k) = b(2, 2);
        }
        // EPR pairs: x correlated, p anti-correlated.
        const double c = q == Quadrature::X ? off : -off;
        for (Index k = 0; k < n; ++k) {
            const Index i = 2 * k + 1;
            const Index j = (2 * k + 2) % (2 * n);
            sb(i, i) += diag;
            sb(j, j) += diag;
            sb(i, j) += c;
            sb(j, i) += c;
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sb, Eigen::EigenvaluesOnly);
        const double lmin = es.eigenvalues().minCoeff();
        const double lmax = es.eigenvalues().maxCoeff();
        if (!(lmin > 0.0) || lmax / lmin > kMaxConditionNumber) {
            throw ConditioningError("gmps: EPR projection is ill-conditioned (condition number " +
                                    std::to_string(lmax / lmin) + "); use a smaller epr_squeeze");
        }
        Eigen::MatrixXd res = sa - sab.transpose() * sb.ldlt().solve(sab);
        detail::symmetrize(res);
        out.block(q) = std::move(res);
    }
    out.mean_x = Eigen::VectorXd::Zero(n);
    out.mean_p = Eigen::VectorXd::Zero(n);
    return out;
}

struct GmpsMoments {
    double u_variance = 0.0;
    double big_u_variance = 0.0;
    double k_measure = 0.0;
};

/// Exact moments of the infinitely squeezed construction.
inline GmpsMoments analytic_moments(double r) {
    if (!(r >= 1.0)) throw InvalidParameter("analytic_moments: r must be >= 1");
    return {1.0 / (2.0 * r), r / 2.0, 1.0 / r};
}

}  // namespace cim
