#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "cimsim/analysis.hpp"
#include "cimsim/couplings.hpp"

using namespace cim;

namespace {

ModelFit params(double big_d, double d, double g, int s_star, Index n) {
    ModelFit f;
    f.d_big_x = f.d_big_p = big_d;
    f.d_small_x = f.d_small_p = d;
    f.gamma_x = f.gamma_p = g;
    f.s_star = s_star;
    f.n_modes = n;
    return f;
}

CouplingRing ring_with(Index n, int s_star) {
    return s_star == 1 ? CouplingRing::ferromagnetic(n) : random_ring(n, -1, 11);
}

// Independent evaluation of the model entry, straight from the formula.
double model_entry(double big_d, double d, double g, int s_star, Index n, Index k, Index l, int s_kl, double sign) {
    const auto m = static_cast<double>(std::abs(k - l));
    return (k == l ? big_d : 0.0) + sign * d * s_kl * (std::pow(g, m) + s_star * std::pow(g, static_cast<double>(n) - m));
}

double min_eig(const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

}  // namespace

TEST(CharacteristicVectors, TwoModes) {
    const auto v = characteristic_vectors(2);
    EXPECT_NEAR(v.u_x[0], -1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(v.u_x[1], 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(CharacteristicVectors, NormsAndSquares) {
    const auto v = characteristic_vectors(30);
    for (const Eigen::VectorXd* x : {&v.u_x, &v.u_p, &v.big_u_x, &v.big_u_p}) EXPECT_NEAR(x->norm(), 1.0, 1e-14);
    EXPECT_LT((v.u_x.array().square() - v.u_p.array().square()).abs().maxCoeff(), 1e-15);
    EXPECT_LT((v.big_u_x.array().square() - v.big_u_p.array().square()).abs().maxCoeff(), 1e-15);
}

TEST(CharacteristicVectors, OddRejected) { EXPECT_THROW(characteristic_vectors(5), UnsupportedParity); }

TEST(MomentVariance, Vacuum) {
    Eigen::VectorXd c = Eigen::VectorXd::Random(6).normalized();
    EXPECT_NEAR(moment_variance(vacuum_state(6), c, Quadrature::X), 0.5, 1e-15);
    EXPECT_THROW(moment_variance(vacuum_state(6), Eigen::VectorXd::Ones(5), Quadrature::X), InvalidParameter);
}

TEST(MomentVariance, SyntheticMatchesBlochFormula) {
    const ModelFit f = params(0.6, 0.3, 0.5, 1, 8);
    const QuadState s = model_covariance(f, CouplingRing::ferromagnetic(8));
    const double v = moment_variance(s, characteristic_vectors(8).u_x, Quadrature::X);
    const double expected = 0.6 + 0.3 * (1 - 0.25) * (1 - std::pow(0.5, 8)) / (1 + 0.25 + 2 * 0.5);
    EXPECT_NEAR(v, expected, 1e-12);
    EXPECT_NEAR(v, 0.6996, 1e-4);
    EXPECT_NEAR(bloch_eigenvalue(f, 4, Quadrature::X), expected, 1e-12);
}

TEST(Bloch, ZeroAmplitude) {
    const ModelFit f = params(0.7, 0.0, 0.4, 1, 10);
    for (Index j = 0; j < 10; ++j) EXPECT_DOUBLE_EQ(bloch_eigenvalue(f, j, Quadrature::X), 0.7);
}

TEST(Bloch, ExtremaAtZeroAndHalf) {
    const ModelFit f = params(0.6, 0.3, 0.5, 1, 12);
    double lo = INFINITY, hi = -INFINITY;
    Index jlo = -1, jhi = -1;
    for (Index j = 0; j < 12; ++j) {
        const double v = bloch_eigenvalue(f, j, Quadrature::X);
        if (v < lo) lo = v, jlo = j;
        if (v > hi) hi = v, jhi = j;
    }
    EXPECT_EQ(jlo, 6);
    EXPECT_EQ(jhi, 0);
}

TEST(Bloch, MatchesDenseSpectrumBothParities) {
    for (int ss : {1, -1}) {
        const Index n = 10;
        const ModelFit f = params(0.9, 0.2, 0.6, ss, n);
        // Translation-invariant frame: ferromagnetic bonds plus S* on the closing one.
        std::vector<int> signs(n, 1);
        signs.back() = ss;
        const QuadState s = model_covariance(f, ring_from_signs(signs));
        for (const Quadrature q : {Quadrature::X, Quadrature::P}) {
            Eigen::VectorXd dense = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s.block(q)).eigenvalues();
            std::vector<double> formula;
            for (Index j = 0; j < n; ++j) formula.push_back(bloch_eigenvalue(f, j, q));
            std::sort(formula.begin(), formula.end());
            for (Index j = 0; j < n; ++j) EXPECT_NEAR(dense[j], formula[static_cast<std::size_t>(j)], 1e-10);
        }
    }
}

TEST(MomentVariance, EqualsBlochEigenvalueForInvariantInput) {
    const ModelFit f = params(0.8, 0.25, 0.45, 1, 16);
    const QuadState s = model_covariance(f, CouplingRing::ferromagnetic(16));
    const auto v = characteristic_vectors(16);
    EXPECT_NEAR(moment_variance(s, v.u_x, Quadrature::X), bloch_eigenvalue(f, 8, Quadrature::X), 1e-10);
    EXPECT_NEAR(moment_variance(s, v.big_u_x, Quadrature::X), bloch_eigenvalue(f, 0, Quadrature::X), 1e-10);
    EXPECT_NEAR(moment_variance(s, v.u_p, Quadrature::P), bloch_eigenvalue(f, 0, Quadrature::P), 1e-10);
    EXPECT_NEAR(moment_variance(s, v.big_u_p, Quadrature::P), bloch_eigenvalue(f, 8, Quadrature::P), 1e-10);
}

TEST(EntanglementK, VacuumIsOne) {
    const auto m = entanglement_k(vacuum_state(8));
    EXPECT_DOUBLE_EQ(m.k_measure, 1.0);
    EXPECT_THROW(entanglement_k(vacuum_state(7)), UnsupportedParity);
}

TEST(EntanglementK, ExtremalMomentsOnFerromagneticModel) {
    const ModelFit f = params(0.9, 0.2, 0.6, 1, 12);
    const QuadState s = model_covariance(f, CouplingRing::ferromagnetic(12));
    const auto m = entanglement_k(s);
    EXPECT_NEAR(m.var_u_x, min_eig(s.sigma_x), 1e-8);
    EXPECT_NEAR(m.var_u_p, min_eig(s.sigma_p), 1e-8);
    EXPECT_LE(m.var_u_x, m.var_U_x + 1e-12);
    EXPECT_LE(m.var_u_p, m.var_U_p + 1e-12);
}

TEST(ModelCovariance, MatchesFormula) {
    const CouplingRing r = random_ring(9, -1, 2);
    const ModelFit f = params(0.6, 0.3, 0.7, -1, 9);
    const QuadState s = model_covariance(f, r);
    for (Index k = 0; k < 9; ++k) {
        for (Index l = 0; l < 9; ++l) {
            const int skl = path_product(r, k, l);
            EXPECT_NEAR(s.sigma_x(k, l), model_entry(0.6, 0.3, 0.7, -1, 9, k, l, skl, 1.0), 1e-14);
            EXPECT_NEAR(s.sigma_p(k, l), model_entry(0.6, 0.3, 0.7, -1, 9, k, l, skl, -1.0), 1e-14);
        }
    }
}

TEST(FitModel, ExactRecoveryFerromagnetic) {
    const ModelFit truth = params(0.6, 0.3, 0.7, 1, 20);
    const ModelFit f = fit_model(model_covariance(truth, random_ring(20, 1, 5)), random_ring(20, 1, 5));
    EXPECT_NEAR(f.d_big_x, 0.6, 1e-6);
    EXPECT_NEAR(f.d_small_x, 0.3, 1e-6);
    EXPECT_NEAR(f.gamma_x, 0.7, 1e-6);
    EXPECT_NEAR(f.d_big_p, 0.6, 1e-6);
    EXPECT_NEAR(f.d_small_p, 0.3, 1e-6);
    EXPECT_NEAR(f.gamma_p, 0.7, 1e-6);
    EXPECT_LT(f.rms_residual_x, 1e-9);
    EXPECT_FALSE(f.degenerate);
}

TEST(FitModel, ExactRecoveryFrustrated) {
    const CouplingRing r = random_ring(20, -1, 8);
    const ModelFit truth = params(1.2, 0.1, 0.4, -1, 20);
    const ModelFit f = fit_model(model_covariance(truth, r), r);
    EXPECT_EQ(f.s_star, -1);
    EXPECT_NEAR(f.d_big_x, 1.2, 1e-6);
    EXPECT_NEAR(f.d_small_x, 0.1, 1e-6);
    EXPECT_NEAR(f.gamma_x, 0.4, 1e-6);
    EXPECT_FALSE(f.degenerate);
}

TEST(FitModel, RoundTripIdempotent) {
    for (int ss : {1, -1}) {
        const CouplingRing r = ring_with(16, ss);
        const QuadState m = model_covariance(params(0.8, 0.2, 0.55, ss, 16), r);
        const QuadState back = model_covariance(fit_model(m, r), r);
        EXPECT_LT((m.sigma_x - back.sigma_x).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_LT((m.sigma_p - back.sigma_p).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(FitModel, WrongSignProfileFlagged) {
    ModelFit truth = params(0.8, 0.2, 0.55, 1, 12);
    QuadState m = model_covariance(truth, CouplingRing::ferromagnetic(12));
    m.sigma_x = (2.0 * m.sigma_x.diagonal().asDiagonal().toDenseMatrix() - m.sigma_x).eval();
    EXPECT_TRUE(fit_model(m, CouplingRing::ferromagnetic(12)).degenerate);
}

TEST(Duan, Vacuum) {
    const Eigen::VectorXd mu = Eigen::Vector2d(1, -1) / std::sqrt(2.0);
    const Eigen::VectorXd nu = Eigen::Vector2d(1, 1) / std::sqrt(2.0);
    const DuanResult r = duan_check(vacuum_state(2), mu, nu);
    EXPECT_NEAR(r.j_sum, 1.0, 1e-15);
    EXPECT_NEAR(r.k_measure, 1.0, 1e-15);
}

TEST(Duan, TwoModeSqueezedIsEntangled) {
    QuadState s = apply_mode_squeeze(vacuum_state(2), 0, 2.0);
    s = apply_mode_squeeze(std::move(s), 1, 0.5);
    s = apply_two_mode_bs(std::move(s), 0, 1, 0.5);
    const Eigen::VectorXd mu = Eigen::Vector2d(1, -1) / std::sqrt(2.0);
    const Eigen::VectorXd nu = Eigen::Vector2d(1, 1) / std::sqrt(2.0);
    const DuanResult r = duan_check(s, mu, nu);
    EXPECT_NEAR(r.k_measure, 0.25, 1e-12);
    EXPECT_LE(r.k_measure, r.j_sum + 1e-15);
    EXPECT_EQ(separability_oracle(s).verdict, Separability::Entangled);
}

TEST(Duan, ConstraintViolations) {
    const Eigen::VectorXd mu = Eigen::Vector2d(1, 0);
    const Eigen::VectorXd nu = Eigen::Vector2d(0, 1);
    EXPECT_THROW(duan_check(vacuum_state(2), mu, nu), InvalidParameter);
    EXPECT_THROW(duan_check(vacuum_state(2), Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1)), InvalidParameter);
}

TEST(Separability, Vacuum) {
    EXPECT_EQ(separability_oracle(vacuum_state(6)).verdict, Separability::Separable);
    const QuadState sq = apply_uniform_squeeze(vacuum_state(4), 3.0);
    EXPECT_EQ(separability_oracle(sq).verdict, Separability::Separable);
}

// K < 1 exactly when the uniform-squeeze oracle finds entanglement, on model
// states in the frame where they are translation invariant.
TEST(Separability, AgreesWithKOnModelGrid) {
    int mismatches = 0;
    int total = 0;
    for (int ss : {1, -1}) {
        for (Index n : {8, 16}) {
            const CouplingRing r = ring_with(n, ss);
            for (int i = 0; i < 20; ++i) {
                for (int j = 0; j < 20; ++j) {
                    const double d = 0.01 + 0.3 * i / 19.0;
                    const double g = 0.05 + 0.9 * j / 19.0;
                    const QuadState s = model_covariance(params(0.6, d, g, ss, n), r);
                    const double k = entanglement_k(to_ferromagnetic_frame(s, r)).k_measure;
                    const bool entangled = separability_oracle(s).verdict == Separability::Entangled;
                    ++total;
                    if ((k < 1.0) != entangled) {
                        ++mismatches;
                        ADD_FAILURE() << "S*=" << ss << " N=" << n << " d=" << d << " g=" << g << " K=" << k
                                      << " oracle=" << (entangled ? "entangled" : "separable");
                    }
                }
            }
        }
    }
    EXPECT_EQ(mismatches, 0) << "of " << total;
}

TEST(Separability, ModelStateWithKAtLeastOneIsSeparable) {
    const CouplingRing r = CouplingRing::ferromagnetic(10);
    const QuadState s = model_covariance(params(1.5, 0.1, 0.5, 1, 10), r);
    ASSERT_GE(entanglement_k(s).k_measure, 1.0);
    EXPECT_EQ(separability_oracle(s).verdict, Separability::Separable);
}

TEST(Gauge, KInvariantUnderExtraFlips) {
    const CouplingRing r = random_ring(12, 1, 3);
    QuadState s = model_covariance(params(0.9, 0.2, 0.6, 1, 12), r);
    const double k0 = entanglement_k(to_ferromagnetic_frame(s, r)).k_measure;
    std::mt19937 gen(5);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<int> g(12);
        for (int& x : g) x = gen() % 2 ? 1 : -1;
        const QuadState t = apply_flips(s, g);
        const CouplingRing rt = gauge_transform(r, g);
        EXPECT_NEAR(entanglement_k(to_ferromagnetic_frame(t, rt)).k_measure, k0, 1e-12);
    }
}
