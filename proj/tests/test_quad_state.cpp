#include <gtest/gtest.h>

#include <cmath>

#include "cimsim/quad_state.hpp"
#include "oracle.hpp"

using namespace cim;

namespace {

QuadState two_mode(double a, double b, double c) {
    QuadState s = vacuum_state(2);
    s.sigma_x << a, c, c, b;
    return s;
}

}  // namespace

TEST(Vacuum, Blocks) {
    const QuadState s = vacuum_state(3);
    EXPECT_TRUE(s.sigma_x.isApprox(0.5 * Eigen::MatrixXd::Identity(3, 3)));
    EXPECT_TRUE(s.sigma_p.isApprox(0.5 * Eigen::MatrixXd::Identity(3, 3)));
    EXPECT_EQ(s.mean_x.squaredNorm(), 0.0);
    EXPECT_EQ(vacuum_state(1).sigma_x(0, 0), 0.5);
}

TEST(Vacuum, SymplecticEigenvaluesAreHalf) {
    for (double nu : symplectic_eigenvalues(vacuum_state(4))) EXPECT_NEAR(nu, 0.5, 1e-15);
}

TEST(Vacuum, ZeroModesRejected) { EXPECT_THROW(vacuum_state(0), InvalidParameter); }

TEST(Squeeze, VacuumEta2) {
    const QuadState s = apply_uniform_squeeze(vacuum_state(2), 2.0);
    EXPECT_DOUBLE_EQ(s.sigma_x(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(s.sigma_p(1, 1), 0.125);
    EXPECT_DOUBLE_EQ(s.sigma_x(0, 1), 0.0);
}

TEST(Squeeze, IdentityAndInvariance) {
    QuadState s = two_mode(1.0, 0.8, 0.3);
    const QuadState same = apply_uniform_squeeze(s, 1.0);
    EXPECT_EQ(same.sigma_x, s.sigma_x);
    const auto before = symplectic_eigenvalues(s);
    const auto after = symplectic_eigenvalues(apply_uniform_squeeze(s, 1.7));
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(before[i], after[i], 1e-12);
    for (double nu : symplectic_eigenvalues(apply_uniform_squeeze(vacuum_state(3), 3.3))) EXPECT_NEAR(nu, 0.5, 1e-12);
}

TEST(Squeeze, NonPositiveRejected) {
    EXPECT_THROW(apply_uniform_squeeze(vacuum_state(1), 0.0), InvalidParameter);
    EXPECT_THROW(apply_uniform_squeeze(vacuum_state(1), -1.0), InvalidParameter);
}

TEST(Loss, Examples) {
    EXPECT_TRUE(apply_uniform_loss(vacuum_state(2), 0.37).sigma_x.isApprox(vacuum_state(2).sigma_x));
    QuadState s = vacuum_state(1);
    s.sigma_x(0, 0) = 2.0;
    EXPECT_DOUBLE_EQ(apply_uniform_loss(s, 0.5).sigma_x(0, 0), 1.25);
    EXPECT_EQ(apply_uniform_loss(s, 0.0).sigma_x, s.sigma_x);
    EXPECT_THROW(apply_uniform_loss(s, 1.0), InvalidParameter);
    EXPECT_THROW(apply_uniform_loss(s, -0.1), InvalidParameter);
}

TEST(Loss, SymplecticEigenvalueExample) {
    const QuadState s = apply_uniform_loss(apply_uniform_squeeze(vacuum_state(1), 2.0), 0.5);
    EXPECT_NEAR(symplectic_eigenvalues(s)[0], std::sqrt(1.25 * 0.3125), 1e-12);
    oracle::Full f = oracle::vacuum(1);
    oracle::squeeze(f, 0, 2.0);
    oracle::loss(f, 0, 0.5);
    EXPECT_NEAR(oracle::symplectic_eigenvalues(f)[0], std::sqrt(1.25 * 0.3125), 1e-12);
}

TEST(Beamsplitter, VacuumInvariant) {
    const QuadState s = apply_two_mode_bs(vacuum_state(2), 0, 1, 0.3);
    EXPECT_TRUE(s.sigma_x.isApprox(vacuum_state(2).sigma_x));
}

TEST(Beamsplitter, FiftyFiftyExample) {
    const QuadState s = apply_two_mode_bs(two_mode(2.0, 0.5, 0.0), 0, 1, 0.5);
    EXPECT_NEAR(s.sigma_x(0, 0), 1.25, 1e-15);
    EXPECT_NEAR(s.sigma_x(1, 1), 1.25, 1e-15);
    EXPECT_NEAR(std::abs(s.sigma_x(0, 1)), 0.75, 1e-15);
}

TEST(Beamsplitter, FullTransmissionFlipsPortJ) {
    QuadState s = two_mode(2.0, 0.5, 0.2);
    s.mean_x << 1.0, 3.0;
    const QuadState t = apply_two_mode_bs(s, 0, 1, 1.0);
    EXPECT_DOUBLE_EQ(t.sigma_x(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(t.sigma_x(0, 1), -0.2);
    EXPECT_DOUBLE_EQ(t.mean_x[1], -3.0);
}

TEST(Beamsplitter, BadIndices) {
    EXPECT_THROW(apply_two_mode_bs(vacuum_state(2), 0, 0, 0.5), IndexError);
    EXPECT_THROW(apply_two_mode_bs(vacuum_state(2), 0, 2, 0.5), IndexError);
    EXPECT_THROW(apply_two_mode_bs(vacuum_state(2), 0, 1, 1.5), InvalidParameter);
}

TEST(AttachDiscard, Examples) {
    EXPECT_TRUE(attach_vacuum(vacuum_state(2), 1).sigma_x.isApprox(vacuum_state(3).sigma_x));
    const QuadState s = two_mode(1.0, 1.0, 0.5);
    const QuadState d = discard_modes(s, {1});
    ASSERT_EQ(d.n_modes(), 1);
    EXPECT_DOUBLE_EQ(d.sigma_x(0, 0), 1.0);
    QuadState prod = two_mode(1.3, 0.7, 0.0);
    EXPECT_DOUBLE_EQ(discard_modes(prod, {0}).sigma_x(0, 0), 0.7);
    EXPECT_THROW(discard_modes(s, {0, 1}), InvalidOperation);
}

TEST(Homodyne, ProductStateUntouched) {
    QuadState s = two_mode(1.3, 0.7, 0.0);
    const auto r = condition_on_homodyne(s, 0, Quadrature::X, OutcomePolicy::fixed(0.4));
    EXPECT_DOUBLE_EQ(r.state.sigma_x(0, 0), 0.7);
    EXPECT_DOUBLE_EQ(r.state.sigma_p(0, 0), 0.5);
}

TEST(Homodyne, CorrelatedExample) {
    const auto r = condition_on_homodyne(two_mode(1.0, 1.0, 0.5), 1, Quadrature::X, OutcomePolicy::mean());
    EXPECT_DOUBLE_EQ(r.state.sigma_x(0, 0), 0.75);
    EXPECT_DOUBLE_EQ(r.outcome.conditional_variance, 1.0);
    EXPECT_EQ(r.outcome.mode_index, 1);
}

TEST(Homodyne, OutcomeIndependentCovariance) {
    const QuadState s = two_mode(1.0, 1.2, 0.5);
    const auto a = condition_on_homodyne(s, 1, Quadrature::X, OutcomePolicy::mean());
    const auto b = condition_on_homodyne(s, 1, Quadrature::X, OutcomePolicy::fixed(7.0));
    const auto c = condition_on_homodyne(s, 1, Quadrature::X, OutcomePolicy::sample(-1.3));
    EXPECT_EQ(a.state.sigma_x, b.state.sigma_x);
    EXPECT_EQ(a.state.sigma_x, c.state.sigma_x);
    EXPECT_NE(a.state.mean_x[0], b.state.mean_x[0]);
}

TEST(Homodyne, DegenerateRejected) {
    QuadState s = two_mode(1.0, 1.0, 0.0);
    s.sigma_x(1, 1) = 1e-16;
    EXPECT_THROW(condition_on_homodyne(s, 1, Quadrature::X, OutcomePolicy::mean()), DegenerateMeasurement);
}

TEST(PhaseFlip, Examples) {
    const QuadState s = two_mode(1.0, 1.0, 0.5);
    const QuadState f = apply_phase_flip(s, 1);
    EXPECT_DOUBLE_EQ(f.sigma_x(0, 1), -0.5);
    EXPECT_DOUBLE_EQ(f.sigma_x(1, 1), 1.0);
    EXPECT_EQ(apply_phase_flip(f, 1).sigma_x, s.sigma_x);
    EXPECT_THROW(apply_phase_flip(s, 5), IndexError);
}

TEST(Physicality, UnphysicalDetected) {
    QuadState s = vacuum_state(1);
    s.sigma_x(0, 0) = 0.2;
    EXPECT_FALSE(is_physical(s));
    s.sigma_x(0, 0) = -0.2;
    EXPECT_THROW(symplectic_eigenvalues(s), PhysicalityError);
}

TEST(Oracle, SingleOperationsAgree) {
    QuadState s = apply_uniform_squeeze(vacuum_state(3), 1.4);
    s = apply_two_mode_bs(std::move(s), 0, 2, 0.3);
    s = displace(std::move(s), 1, 0.2, -0.4);
    oracle::Full f = oracle::from_blocks(s);

    s = apply_mode_loss(std::move(s), 2, 0.25);
    oracle::loss(f, 2, 0.25);
    EXPECT_LT(oracle::distance(f, s), 1e-12);

    s = apply_mode_squeeze(std::move(s), 1, 0.8);
    oracle::squeeze(f, 1, 0.8);
    EXPECT_LT(oracle::distance(f, s), 1e-12);

    s = apply_two_mode_bs(std::move(s), 1, 2, 0.65);
    oracle::beamsplitter(f, 1, 2, 0.65);
    EXPECT_LT(oracle::distance(f, s), 1e-12);

    s = apply_phase_flip(std::move(s), 0);
    oracle::phase_flip(f, 0);
    EXPECT_LT(oracle::distance(f, s), 1e-12);

    const auto r = condition_on_homodyne(s, 2, Quadrature::P, OutcomePolicy::fixed(0.3));
    oracle::homodyne(f, 2, 1, 0.3);
    EXPECT_LT(oracle::distance(f, r.state), 1e-12);

    const auto nu = symplectic_eigenvalues(r.state);
    const auto nu_o = oracle::symplectic_eigenvalues(f);
    ASSERT_EQ(nu.size(), nu_o.size());
    for (std::size_t i = 0; i < nu.size(); ++i) EXPECT_NEAR(nu[i], nu_o[i], 1e-10);
}
