#include "netlqr/lti_sim.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace netlqr {
namespace {

LtiSystem scalar(double a, double b) {
    LtiSystem s;
    s.A = Matrix::Constant(1, 1, a);
    s.B = Matrix::Constant(1, 1, b);
    return s;
}

SignalGenerator single_sine(double w, double t_end, double amplitude = 1.0) {
    return SignalGenerator(1, amplitude, {{w}}, {0}, 0.0, t_end);
}

TEST(Simulate, ScalarDecay) {
    const auto rec = simulate(scalar(-1.0, 0.0), SignalGenerator::zero(1), Vector::Ones(1),
                              TimeGrid::uniform(0.1, 10, 10));
    EXPECT_NEAR(rec.coarse_states()(0, 10), std::exp(-1.0), 1e-6);
    EXPECT_NEAR(rec.coarse_states()(0, 10), 0.36788, 1e-5);
    EXPECT_EQ(rec.states(0, 0), 1.0);
}

TEST(Simulate, IntegratorWithWindowedSine) {
    // x' = sin(t) on [0, pi], then held: x(pi) = 2 and stays there.
    LtiSystem s = scalar(0.0, 1.0);
    s.semistable_eigvec = Vector::Ones(1);
    const double T = M_PI;
    TimeGrid grid = TimeGrid::uniform(T / 50, 100, 20);
    const auto rec = simulate(s, single_sine(1.0, T), Vector::Zero(1), grid);
    const Matrix X = rec.coarse_states();
    EXPECT_NEAR(X(0, 50), 2.0, 1e-6);
    EXPECT_NEAR(X(0, 100), 2.0, 1e-6);
}

TEST(Simulate, TwoStateChainMatchesExpm) {
    LtiSystem s;
    s.A.resize(2, 2);
    s.A << -1, 0, 1, -1;
    s.B = Matrix::Zero(2, 1);
    s.B(0, 0) = 1.0;
    // Short pulse sin(w t) on [0, pi / w], then free decay to t = 2.
    const double w = 20.0, tp = M_PI / w, T = 2.0;

    // Oracle: augment with the sine generator [s; c]' = [w c; -w s].
    Matrix Aug = Matrix::Zero(4, 4);
    Aug.topLeftCorner(2, 2) = s.A;
    Aug.block(0, 2, 2, 1) = s.B;
    Aug(2, 3) = w;
    Aug(3, 2) = -w;
    Vector z0(4);
    z0 << 0, 0, 0, 1;
    const Vector z_pulse = (Aug * tp).exp() * z0;
    const Vector x_ref = (s.A * (T - tp)).exp() * z_pulse.head(2);

    // Align a coarse sample with the pulse end so the kink falls on a node.
    TimeGrid grid;
    grid.substeps = 50;
    for (int j = 0; j <= 10; ++j) grid.coarse_times.push_back(tp * j / 10.0);
    for (int j = 1; j <= 40; ++j) grid.coarse_times.push_back(tp + (T - tp) * j / 40.0);
    const auto rec = simulate(s, single_sine(w, tp), Vector::Zero(2), grid);
    EXPECT_LT((rec.states.rightCols(1) - x_ref).norm(), 1e-6);
}

TEST(Simulate, Superposition) {
    LtiSystem s;
    s.A.resize(3, 3);
    s.A << -1, 0.5, 0, 0, -2, 1, 0.3, 0, -1.5;
    s.B = Matrix::Identity(3, 2);
    NoiseConfig c1;
    c1.num_inputs = 2;
    c1.num_sines = 5;
    c1.t_end = 2.0;
    c1.seed = 3;
    NoiseConfig c2 = c1;
    c2.seed = 4;
    const auto u1 = exploration_noise(c1);
    const auto u2 = exploration_noise(c2);
    std::vector<std::vector<double>> both(2);
    for (int c = 0; c < 2; ++c) {
        both[c] = u1.frequencies()[c];
        both[c].insert(both[c].end(), u2.frequencies()[c].begin(), u2.frequencies()[c].end());
    }
    const SignalGenerator sum(2, c1.amplitude, both, u1.channel_map(), 0.0, 2.0);
    const auto grid = TimeGrid::uniform(0.05, 60, 10);
    const auto r1 = simulate(s, u1, Vector::Zero(3), grid);
    const auto r2 = simulate(s, u2, Vector::Zero(3), grid);
    const auto r12 = simulate(s, sum, Vector::Zero(3), grid);
    EXPECT_LT((r12.states - r1.states - r2.states).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Simulate, FourthOrderConvergence) {
    LtiSystem s;
    s.A.resize(2, 2);
    s.A << 0, 1, -4, -0.4;
    s.B = Matrix::Zero(2, 1);
    const Vector x0 = Vector::Unit(2, 0);
    const Vector exact = (s.A * 2.0).exp() * x0;
    const auto coarse = simulate(s, SignalGenerator::zero(1), x0, TimeGrid::uniform(0.2, 10, 2));
    const auto fine = simulate(s, SignalGenerator::zero(1), x0, TimeGrid::uniform(0.2, 10, 4));
    const double e1 = (coarse.states.rightCols(1) - exact).norm();
    const double e2 = (fine.states.rightCols(1) - exact).norm();
    EXPECT_GT(e1 / e2, 12.0);  // 16 in the asymptotic regime
    EXPECT_LT(e1 / e2, 20.0);
}

TEST(Simulate, RecordInvariants) {
    const auto grid = TimeGrid::uniform(0.1, 5, 4);
    const auto rec = simulate(scalar(-1, 1), single_sine(3.0, 0.3), Vector::Constant(1, 2.0), grid);
    ASSERT_EQ(rec.fine_times.size(), 21u);
    for (std::size_t j = 0; j < rec.coarse_times.size(); ++j) {
        EXPECT_DOUBLE_EQ(rec.fine_times[rec.coarse_index[j]], rec.coarse_times[j]);
    }
    EXPECT_EQ(rec.states(0, 0), 2.0);
    // input is zero after the window
    EXPECT_EQ(rec.inputs(0, 20), 0.0);
}

TEST(Simulate, DimensionMismatchThrows) {
    EXPECT_THROW((void)simulate(scalar(-1, 1), SignalGenerator::zero(1), Vector::Zero(2), TimeGrid::uniform(0.1, 2)),
                 DimensionError);
    EXPECT_THROW((void)simulate(scalar(-1, 1), SignalGenerator::zero(2), Vector::Zero(1), TimeGrid::uniform(0.1, 2)),
                 DimensionError);
}

TEST(Simulate, UnstableBlowupIsNumericalError) {
    EXPECT_THROW((void)simulate(scalar(800.0, 0.0), SignalGenerator::zero(1), Vector::Ones(1),
                                TimeGrid::uniform(1.0, 60, 2)),
                 NumericalError);
}

TEST(Noise, SingleSinePeak) {
    const double w = 3.7;
    const auto u = single_sine(w, 10.0);
    EXPECT_NEAR(u.value(M_PI / (2 * w))(0), 1.0, 1e-15);
}

TEST(Noise, ZeroOutsideWindow) {
    NoiseConfig c;
    c.t_start = 1.0;
    c.t_end = 2.0;
    const auto u = exploration_noise(c);
    EXPECT_EQ(u.value(0.5)(0), 0.0);
    EXPECT_EQ(u.value(2.0)(0), 0.0);
    EXPECT_EQ(u.value(3.0)(0), 0.0);
    EXPECT_NE(u.value(1.5)(0), 0.0);
}

TEST(Noise, PaperConfigurationAndDeterminism) {
    NoiseConfig c;  // 400 sines, beta 0.05, [-20, 20], window [0, 1]
    c.num_inputs = 2;
    c.seed = 42;
    const auto a = exploration_noise(c);
    const auto b = exploration_noise(c);
    ASSERT_EQ(a.frequencies().size(), 2u);
    EXPECT_EQ(a.frequencies()[0].size(), 400u);
    EXPECT_EQ(a.frequencies(), b.frequencies());
    for (const auto& ch : a.frequencies())
        for (double w : ch) {
            EXPECT_GE(w, -20.0);
            EXPECT_LE(w, 20.0);
        }
    EXPECT_DOUBLE_EQ(a.amplitude(), 0.05);
    c.seed = 43;
    EXPECT_NE(exploration_noise(c).frequencies(), a.frequencies());
}

TEST(Noise, ChannelMap) {
    NoiseConfig c;
    c.num_inputs = 3;
    c.channel_map = {1};
    const auto u = exploration_noise(c);
    const Vector v = u.value(0.37);
    EXPECT_EQ(v(0), 0.0);
    EXPECT_EQ(v(2), 0.0);
    EXPECT_NE(v(1), 0.0);
}

TEST(Noise, RejectsEmptyWindow) {
    NoiseConfig c;
    c.t_end = c.t_start;
    EXPECT_THROW((void)exploration_noise(c), Error);
}

TEST(Impulse, ScalarResponse) {
    const Vector d = Vector::Ones(1);
    const auto recs = impulse_responses(scalar(-1, 1), std::span<const Vector>(&d, 1), 2.0, 0.01);
    ASSERT_EQ(recs.size(), 1u);
    const auto& r = recs[0];
    for (std::size_t k = 0; k < r.fine_times.size(); k += 37) {
        EXPECT_NEAR(r.states(0, static_cast<long>(k)), std::exp(-r.fine_times[k]), 1e-8);
    }
}

TEST(LtiSystem, Validate) {
    LtiSystem s = scalar(-1, 1);
    EXPECT_NO_THROW(s.validate());
    s.A(0, 0) = 0.5;
    EXPECT_THROW(s.validate(), NumericalError);
    LtiSystem c;
    c.A.resize(2, 2);
    c.A << -1, 1, 1, -1;
    c.B = Matrix::Identity(2, 1);
    EXPECT_THROW(c.validate(), NumericalError);  // zero eigenvalue undeclared
    c.semistable_eigvec = Vector::Ones(2);
    EXPECT_NO_THROW(c.validate());
    c.semistable_eigvec = Vector::Unit(2, 0);
    EXPECT_THROW(c.validate(), NumericalError);
}

}  // namespace
}  // namespace netlqr
