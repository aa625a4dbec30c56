#pragma once

// Nearest-neighbour Ising couplings on a 1D ring.
//
// Public indices are 0-based: sign(k) couples mode k to mode k+1 and the last
// sign closes the ring (mode N-1 to mode 0).

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cimsim/errors.hpp"
#include "cimsim/quad_state.hpp"
#include "cimsim/rng.hpp"

namespace cim {

class CouplingRing {
public:
    CouplingRing() = default;

    explicit CouplingRing(std::vector<int> signs) : signs_(std::move(signs)) {
        if (signs_.size() < 2) throw InvalidParameter("coupling ring needs at least 2 sites");
        s_star_ = 1;
        for (std::size_t k = 0; k < signs_.size(); ++k) {
            if (signs_[k] != 1 && signs_[k] != -1) {
                throw InvalidParameter("coupling " + std::to_string(k) + " is " +
                                       std::to_string(signs_[k]) + ", expected +1 or -1");
            }
            s_star_ *= signs_[k];
        }
    }

    static CouplingRing ferromagnetic(Index n) { return CouplingRing(std::vector<int>(static_cast<std::size_t>(n), 1)); }

    Index n_modes() const noexcept { return static_cast<Index>(signs_.size()); }
    int sign(Index k) const { return signs_.at(static_cast<std::size_t>(k)); }
    std::span<const int> signs() const noexcept { return signs_; }
    /// Product of all signs; -1 means frustrated.
    int s_star() const noexcept { return s_star_; }
    bool frustrated() const noexcept { return s_star_ == -1; }

    friend bool operator==(const CouplingRing&, const CouplingRing&) = default;

private:
    std::vector<int> signs_;
    int s_star_ = 1;
};

inline CouplingRing ring_from_signs(std::vector<int> signs) { return CouplingRing(std::move(signs)); }

/// Uniform signs conditioned on the requested product: N-1 free signs, the
/// last one fixed by parity.
inline CouplingRing random_ring(Index n, int target_s_star, std::uint64_t seed) {
    if (n < 2) throw InvalidParameter("random_ring: n must be >= 2");
    if (target_s_star != 1 && target_s_star != -1) throw InvalidParameter("random_ring: target must be +1 or -1");
    std::mt19937_64 gen(mix64(seed));
    std::vector<int> signs(static_cast<std::size_t>(n));
    int prod = 1;
    for (Index k = 0; k + 1 < n; ++k) {
        const int s = (gen() >> 63) ? -1 : 1;
        signs[static_cast<std::size_t>(k)] = s;
        prod *= s;
    }
    signs.back() = prod * target_s_star;
    return CouplingRing(std::move(signs));
}

/// Product of the signs along the ascending path between k and l (no wrap).
inline int path_product(const CouplingRing& ring, Index k, Index l) {
    const Index n = ring.n_modes();
    if (k < 0 || l < 0 || k >= n || l >= n) throw IndexError("path_product: index out of range");
    int p = 1;
    for (Index i = std::min(k, l); i < std::max(k, l); ++i) p *= ring.sign(i);
    return p;
}

/// All path products S_{k,l} as a dense matrix.
inline Eigen::MatrixXi path_product_matrix(const CouplingRing& ring) {
    const Index n = ring.n_modes();
    Eigen::MatrixXi s(n, n);
    for (Index k = 0; k < n; ++k) {
        s(k, k) = 1;
        for (Index l = k + 1; l < n; ++l) {
            s(k, l) = s(k, l - 1) * ring.sign(l - 1);
            s(l, k) = s(k, l);
        }
    }
    return s;
}

/// Flip pattern S_{0,k} that makes every bond except the closing one
/// ferromagnetic. The closing bond ends up carrying S*.
inline std::vector<int> flip_pattern(const CouplingRing& ring) {
    std::vector<int> g(static_cast<std::size_t>(ring.n_modes()));
    int p = 1;
    for (Index k = 0; k < ring.n_modes(); ++k) {
        g[static_cast<std::size_t>(k)] = p;
        p *= ring.sign(k);
    }
    return g;
}

/// Local phase flips (S_{0,0}, ..., S_{0,N-1}) mapping the ring to all +1.
inline std::vector<int> gauge_signs(const CouplingRing& ring) {
    if (ring.frustrated()) throw GaugeError("frustrated ring (S* = -1) cannot be gauged to ferromagnetic");
    return flip_pattern(ring);
}

/// Coupling signs after applying local flips g: s'_k = g_k s_k g_{k+1}.
inline CouplingRing gauge_transform(const CouplingRing& ring, std::span<const int> flips) {
    const Index n = ring.n_modes();
    if (static_cast<Index>(flips.size()) != n) throw InvalidParameter("gauge_transform: size mismatch");
    std::vector<int> out(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) {
        out[static_cast<std::size_t>(k)] = flips[static_cast<std::size_t>(k)] * ring.sign(k) *
                                           flips[static_cast<std::size_t>((k + 1) % n)];
    }
    return CouplingRing(std::move(out));
}

/// Applies phase flips on every mode whose pattern entry is -1.
inline QuadState apply_flips(QuadState s, std::span<const int> flips) {
    if (static_cast<Index>(flips.size()) != s.n_modes()) throw InvalidParameter("apply_flips: size mismatch");
    for (Index k = 0; k < s.n_modes(); ++k) {
        if (flips[static_cast<std::size_t>(k)] == -1) s = apply_phase_flip(std::move(s), k);
    }
    return s;
}

/// Brings a state produced on `ring` into the frame where the couplings read
/// all ferromagnetic (for S* = -1 every bond but the closing one).
inline QuadState to_ferromagnetic_frame(QuadState s, const CouplingRing& ring) {
    return apply_flips(std::move(s), flip_pattern(ring));
}

/// Matrix mapping mode amplitudes x to the measured combinations
/// y_k = (x_k - s_k x_{k+1}) / sqrt(2).
struct BasisMatrix {
    Eigen::MatrixXd m;
    bool invertible = false;
};

inline BasisMatrix build_m(const CouplingRing& ring) {
    const Index n = ring.n_modes();
    const double h = 1.0 / std::sqrt(2.0);
    BasisMatrix b;
    b.m = Eigen::MatrixXd::Zero(n, n);
    for (Index k = 0; k < n; ++k) {
        b.m(k, k) += h;
        b.m(k, (k + 1) % n) += -ring.sign(k) * h;
    }
    b.invertible = ring.frustrated();
    return b;
}

/// Closed-form inverse: (1/sqrt 2) * [ +S_{k,l} above the diagonal, 1 on it,
/// -S_{k,l} below ]. Exists only for frustrated rings.
inline Eigen::MatrixXd invert_m(const CouplingRing& ring) {
    if (!ring.frustrated()) throw SingularMatrix("M is singular unless S* = -1");
    const Index n = ring.n_modes();
    const Eigen::MatrixXi s = path_product_matrix(ring);
    const double h = 1.0 / std::sqrt(2.0);
    Eigen::MatrixXd inv(n, n);
    for (Index k = 0; k < n; ++k) {
        for (Index l = 0; l < n; ++l) {
            if (k == l) inv(k, l) = h;
            else inv(k, l) = (k < l ? 1.0 : -1.0) * s(k, l) * h;
        }
    }
    return inv;
}

}  // namespace cim
