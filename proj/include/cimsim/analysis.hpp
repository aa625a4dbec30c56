#pragma once

// Characteristic moments, the EPR-type entanglement measure K, the
// exponential-correlation covariance model and its fit, and separability checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "cimsim/couplings.hpp"
#include "cimsim/errors.hpp"
#include "cimsim/quad_state.hpp"

namespace cim {

struct CharacteristicVectors {
    Eigen::VectorXd u_x;  // alternating (-1)^k / sqrt(N), k = 1..N
    Eigen::VectorXd u_p;  // uniform
    Eigen::VectorXd big_u_x;  // uniform
    Eigen::VectorXd big_u_p;  // alternating
};

inline void require_even(Index n, const char* what) {
    if (n < 2 || n % 2 != 0) {
        throw UnsupportedParity(std::string(what) + ": needs an even number of modes >= 2, got " +
                                std::to_string(n));
    }
}

inline CharacteristicVectors characteristic_vectors(Index n) {
    require_even(n, "characteristic_vectors");
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    Eigen::VectorXd alt(n);
    for (Index i = 0; i < n; ++i) alt[i] = (i % 2 == 0 ? -1.0 : 1.0) * norm;
    const Eigen::VectorXd uni = Eigen::VectorXd::Constant(n, norm);
    return {alt, uni, uni, alt};
}

/// coeffs^T sigma^q coeffs.
inline double moment_variance(const QuadState& s, const Eigen::VectorXd& coeffs, Quadrature q) {
    if (coeffs.size() != s.n_modes()) {
        throw InvalidParameter("moment_variance: coefficient length " + std::to_string(coeffs.size()) +
                               " does not match " + std::to_string(s.n_modes()) + " modes");
    }
    return coeffs.dot(s.block(q) * coeffs);
}

struct CharacteristicMoments {
    double var_u_x = 0.0;
    double var_u_p = 0.0;
    double var_U_x = 0.0;
    double var_U_p = 0.0;
    double k_measure = 0.0;
};

/// K = 2 sqrt(<u_x^2><u_p^2>). The state must already be in the ferromagnetic frame.
inline CharacteristicMoments entanglement_k(const QuadState& s) {
    const auto v = characteristic_vectors(s.n_modes());
    CharacteristicMoments m;
    m.var_u_x = moment_variance(s, v.u_x, Quadrature::X);
    m.var_u_p = moment_variance(s, v.u_p, Quadrature::P);
    m.var_U_x = moment_variance(s, v.big_u_x, Quadrature::X);
    m.var_U_p = moment_variance(s, v.big_u_p, Quadrature::P);
    m.k_measure = 2.0 * std::sqrt(std::max(0.0, m.var_u_x * m.var_u_p));
    return m;
}

/// Parameters of the steady-state covariance model
///   sigma^x_kl = D^x delta_kl + d^x S_kl [g_x^|k-l| + S* g_x^(N-|k-l|)]
///   sigma^p_kl = D^p delta_kl - d^p S_kl [g_p^|k-l| + S* g_p^(N-|k-l|)]
struct ModelFit {
    double d_big_x = 0.0;
    double d_small_x = 0.0;
    double gamma_x = 0.0;
    double d_big_p = 0.0;
    double d_small_p = 0.0;
    double gamma_p = 0.0;
    int s_star = 1;
    Index n_modes = 0;
    double rms_residual_x = 0.0;
    double rms_residual_p = 0.0;
    /// Set when the gauge-folded correlation profile has the wrong sign somewhere.
    bool degenerate = false;
};

namespace detail {

inline double model_profile(double gamma, int s_star, Index n, Index m) {
    return std::pow(gamma, static_cast<double>(m)) + s_star * std::pow(gamma, static_cast<double>(n - m));
}

}  // namespace detail

/// Builds the two covariance blocks of the model on a given ring.
inline QuadState model_covariance(const ModelFit& f, const CouplingRing& ring) {
    const Index n = ring.n_modes();
    const Eigen::MatrixXi s = path_product_matrix(ring);
    const int ss = ring.s_star();
    QuadState st = vacuum_state(n);
    for (Index k = 0; k < n; ++k) {
        for (Index l = 0; l < n; ++l) {
            const Index m = std::abs(k - l);
            const double base_x = f.d_small_x * s(k, l) * detail::model_profile(f.gamma_x, ss, n, m);
            const double base_p = f.d_small_p * s(k, l) * detail::model_profile(f.gamma_p, ss, n, m);
            st.sigma_x(k, l) = (k == l ? f.d_big_x : 0.0) + base_x;
            st.sigma_p(k, l) = (k == l ? f.d_big_p : 0.0) - base_p;
        }
    }
    return st;
}

/// Closed-form eigenvalue of a model block. For S* = +1 the eigenvectors are
/// the Bloch vectors with momentum 2 pi j / N; for S* = -1 (after the flip
/// pattern) the block is anti-periodic and the momenta shift to pi (2j+1) / N.
inline double bloch_eigenvalue(const ModelFit& f, Index j, Quadrature q) {
    const Index n = f.n_modes;
    if (n < 2 || j < 0 || j >= n) throw IndexError("bloch_eigenvalue: j out of range");
    const bool x = q == Quadrature::X;
    const double D = x ? f.d_big_x : f.d_big_p;
    const double d = x ? f.d_small_x : f.d_small_p;
    const double g = x ? f.gamma_x : f.gamma_p;
    const double theta = f.s_star == 1 ? 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n)
                                       : std::numbers::pi * static_cast<double>(2 * j + 1) / static_cast<double>(n);
    const double term = d * (1.0 - g * g) * (1.0 - f.s_star * std::pow(g, static_cast<double>(n))) /
                        (1.0 + g * g - 2.0 * g * std::cos(theta));
    return x ? D + term : D - term;
}

namespace detail {

struct ProfileFit {
    double d = 0.0;
    double gamma = 0.0;
    double sse = 0.0;
};

// Least-squares amplitude for a fixed gamma, and the resulting SSE.
inline ProfileFit amplitude_at(const std::vector<double>& c, double gamma, int s_star, Index n) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double f = model_profile(gamma, s_star, n, static_cast<Index>(i) + 1);
        num += f * c[i];
        den += f * f;
    }
    ProfileFit out{den > 0.0 ? num / den : 0.0, gamma, 0.0};
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double r = c[i] - out.d * model_profile(gamma, s_star, n, static_cast<Index>(i) + 1);
        out.sse += r * r;
    }
    return out;
}

// Fits c_m = d [g^m + S* g^(N-m)], m = 1..len(c).
inline ProfileFit fit_profile(const std::vector<double>& c, int s_star, Index n) {
    constexpr double lo = 1e-9;
    constexpr double hi = 1.0 - 1e-9;
    auto sse = [&](double g) { return amplitude_at(c, g, s_star, n).sse; };

    // Start from the adjacent ratio, then make sure a coarse scan does not
    // find a better basin.
    double best_g = 0.5;
    if (c.size() >= 2 && c[0] != 0.0) best_g = std::clamp(c[1] / c[0], lo, hi);
    double best = sse(best_g);
    constexpr int kScan = 400;
    for (int i = 1; i < kScan; ++i) {
        const double g = static_cast<double>(i) / kScan;
        const double v = sse(g);
        if (v < best) {
            best = v;
            best_g = g;
        }
    }

    // Golden section inside one scan step around the incumbent.
    double a = std::max(lo, best_g - 1.0 / kScan);
    double b = std::min(hi, best_g + 1.0 / kScan);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = sse(x1);
    double f2 = sse(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-15; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = sse(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = sse(x2);
        }
    }
    ProfileFit fit = amplitude_at(c, 0.5 * (a + b), s_star, n);
    if (best < fit.sse) fit = amplitude_at(c, best_g, s_star, n);

    // Gauss-Newton polish on (d, gamma); golden section alone stalls near
    // sqrt(machine epsilon).
    for (int it = 0; it < 20; ++it) {
        double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double m = static_cast<double>(i + 1);
            const double nm = static_cast<double>(n) - m;
            const double f = std::pow(fit.gamma, m) + s_star * std::pow(fit.gamma, nm);
            const double df = m * std::pow(fit.gamma, m - 1) + s_star * nm * std::pow(fit.gamma, nm - 1);
            const double jd = f;
            const double jg = fit.d * df;
            const double r = c[i] - fit.d * f;
            jtj00 += jd * jd;
            jtj01 += jd * jg;
            jtj11 += jg * jg;
            jtr0 += jd * r;
            jtr1 += jg * r;
        }
        const double det = jtj00 * jtj11 - jtj01 * jtj01;
        if (!(std::abs(det) > 0.0)) break;
        const double dg = (jtj00 * jtr1 - jtj01 * jtr0) / det;
        const double g_new = std::clamp(fit.gamma + dg, lo, hi);
        const ProfileFit trial = amplitude_at(c, g_new, s_star, n);
        if (!(trial.sse < fit.sse)) break;
        fit = trial;
    }
    return fit;
}

}  // namespace detail

/// Fits the covariance model to the state produced on `ring`.
///
/// The blocks are folded into the ferromagnetic frame (entry (k,l) multiplied
/// by S_kl), averaged over ring translations at each separation m = 1..N/2
/// (separation N-m folds onto m with a factor S*), and the decay profile
/// c_m = d [g^m + S* g^(N-m)] is fitted in g by a 1-D search with d solved
/// linearly. D follows from the mean diagonal. Residuals are RMS over all
/// off-diagonal entries of the original blocks.
inline ModelFit fit_model(const QuadState& state, const CouplingRing& ring) {
    const Index n = state.n_modes();
    if (ring.n_modes() != n) throw InvalidParameter("fit_model: ring size does not match state");
    if (n < 4) throw InvalidParameter("fit_model: needs at least 4 modes");
    const Eigen::MatrixXi s = path_product_matrix(ring);
    const int ss = ring.s_star();
    const Index half = n / 2;

    ModelFit fit;
    fit.s_star = ss;
    fit.n_modes = n;

    for (const Quadrature q : {Quadrature::X, Quadrature::P}) {
        const Eigen::MatrixXd& blk = state.block(q);
        const double sign = q == Quadrature::X ? 1.0 : -1.0;
        std::vector<double> profile(static_cast<std::size_t>(half), 0.0);
        std::vector<int> count(static_cast<std::size_t>(half), 0);
        for (Index k = 0; k < n; ++k) {
            for (Index l = k + 1; l < n; ++l) {
                const Index sep = l - k;
                const Index m = sep <= half ? sep : n - sep;
                const double fold = sep <= half ? 1.0 : static_cast<double>(ss);
                profile[static_cast<std::size_t>(m - 1)] += sign * fold * s(k, l) * blk(k, l);
                ++count[static_cast<std::size_t>(m - 1)];
            }
        }
        for (std::size_t i = 0; i < profile.size(); ++i) {
            profile[i] /= count[i];
            // For S* = -1 the model itself vanishes at m = N/2.
            const bool zero_allowed = ss == -1 && 2 * static_cast<Index>(i + 1) == n;
            if (profile[i] <= 0.0 && !zero_allowed) fit.degenerate = true;
        }
        const detail::ProfileFit pf = detail::fit_profile(profile, ss, n);
        const double diag_mean = blk.diagonal().mean();
        const double diag_model = pf.d * detail::model_profile(pf.gamma, ss, n, 0);
        if (q == Quadrature::X) {
            fit.d_small_x = pf.d;
            fit.gamma_x = pf.gamma;
            fit.d_big_x = diag_mean - diag_model;
        } else {
            fit.d_small_p = pf.d;
            fit.gamma_p = pf.gamma;
            fit.d_big_p = diag_mean + diag_model;
        }
    }

    const QuadState model = model_covariance(fit, ring);
    for (const Quadrature q : {Quadrature::X, Quadrature::P}) {
        const Eigen::MatrixXd diff = state.block(q) - model.block(q);
        double acc = 0.0;
        for (Index k = 0; k < n; ++k)
            for (Index l = 0; l < n; ++l)
                if (k != l) acc += diff(k, l) * diff(k, l);
        const double rms = std::sqrt(acc / static_cast<double>(n * (n - 1)));
        (q == Quadrature::X ? fit.rms_residual_x : fit.rms_residual_p) = rms;
    }
    return fit;
}

struct DuanResult {
    double j_sum = 0.0;
    double k_measure = 0.0;
};

/// J = <mu^2> + <nu^2> and K = 2 sqrt(<mu^2><nu^2>) for normalised moments
/// mu = sum mu_k x_k, nu = sum nu_k p_k with mu_k^2 = nu_k^2.
inline DuanResult duan_check(const QuadState& s, const Eigen::VectorXd& mu, const Eigen::VectorXd& nu) {
    constexpr double tol = 1e-12;
    if (mu.size() != s.n_modes() || nu.size() != s.n_modes()) {
        throw InvalidParameter("duan_check: coefficient length mismatch");
    }
    if (std::abs(mu.squaredNorm() - 1.0) > tol || std::abs(nu.squaredNorm() - 1.0) > tol) {
        throw InvalidParameter("duan_check: moments must be normalised");
    }
    if ((mu.array().square() - nu.array().square()).abs().maxCoeff() > tol) {
        throw InvalidParameter("duan_check: requires mu_k^2 == nu_k^2 for every k");
    }
    const double vm = moment_variance(s, mu, Quadrature::X);
    const double vn = moment_variance(s, nu, Quadrature::P);
    return {vm + vn, 2.0 * std::sqrt(std::max(0.0, vm * vn))};
}

enum class Separability { Separable, Entangled };

inline const char* to_string(Separability s) { return s == Separability::Separable ? "separable" : "entangled"; }

struct SeparabilityReport {
    Separability verdict = Separability::Separable;
    /// Uniform local squeeze x -> sqrt(b) x that maximised the margin.
    double best_squeeze = 1.0;
    /// max_b min(lambda_min(b sigma_x), lambda_min(sigma_p / b)).
    double min_eigenvalue = 0.0;
};

/// Certifies separability through (sigma - 1/2) >= 0 after a uniform local
/// squeeze. Reports entangled when no squeeze achieves it.
inline SeparabilityReport separability_oracle(const QuadState& s) {
    auto lmin = [](const Eigen::MatrixXd& m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
        return es.eigenvalues()[0];
    };
    const double lx = lmin(s.sigma_x);
    const double lp = lmin(s.sigma_p);
    SeparabilityReport rep;
    if (!(lx > 0.0) || !(lp > 0.0)) {
        rep.verdict = Separability::Entangled;
        rep.min_eigenvalue = std::min(lx, lp);
        return rep;
    }
    auto margin = [&](double log_b) {
        const double b = std::exp(log_b);
        return std::min(b * lx, lp / b);
    };
    // Golden-section search on log b around the balancing point.
    const double seed = 0.5 * std::log(lp / lx);
    double a = seed - std::log(4.0);
    double b = seed + std::log(4.0);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = margin(x1);
    double f2 = margin(x2);
    for (int it = 0; it < 100; ++it) {
        if (f1 > f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = margin(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = margin(x2);
        }
    }
    double best_log = 0.5 * (a + b);
    if (margin(seed) > margin(best_log)) best_log = seed;
    rep.best_squeeze = std::exp(best_log);
    rep.min_eigenvalue = margin(best_log);
    rep.verdict = rep.min_eigenvalue >= kVacuumVariance - kPhysicalityTolerance ? Separability::Separable
                                                                                 : Separability::Entangled;
    return rep;
}

}  // namespace cim
