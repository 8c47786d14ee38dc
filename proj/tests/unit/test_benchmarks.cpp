#include "netlqr/benchmarks.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace netlqr {
namespace {

std::vector<double> sorted_real_eigs(const Matrix& A) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return ev;
}

TEST(Consensus, FourCycleSpectrum) {
    ConsensusConfig c;
    c.area_sizes = {2, 2};
    c.inter_area_links = 2;
    c.intra_weight_lo = c.intra_weight_hi = 1.0;
    c.inter_weight = 1.0;
    c.actuated_nodes = {0};
    const auto p = gen_consensus(c);
    const auto ev = sorted_real_eigs(p.sys.A);
    const std::vector<double> ref{-4, -2, -2, 0};
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(ev[i], ref[i], 1e-12);
}

TEST(Consensus, PaperConfiguration) {
    const ConsensusConfig c;
    const auto p = gen_consensus(c);
    const long n = 150;
    ASSERT_EQ(p.sys.n(), n);
    ASSERT_EQ(p.sys.m(), 2);
    const Vector ones = Vector::Ones(n);
    EXPECT_LT((p.sys.A * ones).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((p.weights.Q * ones).norm(), 1e-12);
    EXPECT_NO_THROW(p.sys.validate());
    EXPECT_EQ(p.sys.B(0, 0), 1.0);
    EXPECT_EQ(p.sys.B(1, 1), 1.0);
    EXPECT_EQ(p.weights.R, Matrix::Identity(2, 2));
    EXPECT_NEAR(p.x0.norm(), 1.0, 1e-14);
    EXPECT_NEAR(p.x0.sum(), 0.0, 1e-12);
    // connected: single zero eigenvalue, everything else strictly negative
    const auto ev = sorted_real_eigs(p.sys.A);
    EXPECT_LT(ev[n - 2], -1e-6);
    // symmetric, four inter-area links of weight 0.1
    EXPECT_EQ(p.sys.A, p.sys.A.transpose());
    int links = 0;
    for (long i = 0; i < 30; ++i)
        for (long j = 30; j < n; ++j)
            if (p.sys.A(i, j) != 0.0) {
                ++links;
                EXPECT_DOUBLE_EQ(p.sys.A(i, j), 0.1);
            }
    EXPECT_EQ(links, 4);
}

TEST(Consensus, QuadraticFormIsDisagreementPenalty) {
    ConsensusConfig c;
    c.area_sizes = {3, 4};
    c.inter_area_links = 2;
    c.alpha = 2.5;
    const auto p = gen_consensus(c);
    Vector x(7);
    x << 0.3, -1, 2, 0.5, 0, 1.5, -0.7;
    double ref = 0.0;
    for (long i = 1; i < 7; ++i) ref += (x(0) - x(i)) * (x(0) - x(i));
    EXPECT_NEAR(x.dot(p.weights.Q * x), c.alpha * ref, 1e-12);
}

TEST(Consensus, DeterministicPerSeed) {
    ConsensusConfig c;
    c.area_sizes = {10, 15};
    c.inter_area_links = 3;
    const auto a = gen_consensus(c);
    const auto b = gen_consensus(c);
    EXPECT_EQ(a.sys.A, b.sys.A);
    EXPECT_EQ(a.x0, b.x0);
    c.seed = 2;
    EXPECT_NE(gen_consensus(c).sys.A, a.sys.A);
}

TEST(Consensus, RejectsBadConfig) {
    ConsensusConfig c;
    c.actuated_nodes = {500};
    EXPECT_THROW((void)gen_consensus(c), Error);
    c = ConsensusConfig{};
    c.inter_area_links = 0;
    EXPECT_THROW((void)gen_consensus(c), Error);
}

TEST(Oscillator, TwoNodeCharacteristicPolynomial) {
    OscillatorConfig c;
    c.k_nodes = 2;
    c.coupling_lo = c.coupling_hi = 1.3;
    c.damping_lo = c.damping_hi = 0.6;
    const auto p = gen_oscillator_semistable(c);
    const auto ev = spectrum(p.sys.A);
    // roots of s^2 + d s + 2k, plus {0, -d} from the common mode
    const double d = 0.6, k = 1.3;
    const Complex r1 = (-d + std::sqrt(Complex(d * d - 8 * k))) / 2.0;
    int hits = 0;
    for (const Complex& e : ev) {
        if (std::abs(e - r1) < 1e-10 || std::abs(e - std::conj(r1)) < 1e-10) ++hits;
    }
    EXPECT_EQ(hits, 2);
    EXPECT_NEAR(std::abs(ev[0]), 0.0, 1e-12);
}

TEST(Oscillator, SemistableStructure) {
    const auto p = gen_oscillator_semistable(OscillatorConfig{});
    const Vector& v = *p.sys.semistable_eigvec;
    EXPECT_LT((p.sys.A * v).norm(), 1e-12);
    EXPECT_EQ((p.weights.Q * v).norm(), 0.0);
    EXPECT_NO_THROW(p.sys.validate());
    EXPECT_NEAR(p.x0.dot(v), 0.0, 1e-12);
}

TEST(DeriveSeed, StreamsDiffer) {
    EXPECT_NE(derive_seed(1, 10), derive_seed(1, 11));
    EXPECT_NE(derive_seed(1, 10), derive_seed(2, 10));
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Fnv, KnownVector) {
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

class SmallExperiment : public ::testing::Test {
protected:
    static ConsensusConfig config() {
        ConsensusConfig c;
        c.area_sizes = {3, 4};
        c.inter_area_links = 2;
        c.actuated_nodes = {0, 4};
        c.alpha = 1.0;
        return c;
    }
    static NoiseConfig noise() {
        NoiseConfig nc;
        nc.num_sines = 30;
        nc.amplitude = 0.5;
        nc.t_end = 20.0;
        nc.seed = 5;
        return nc;
    }
};

TEST_F(SmallExperiment, FullDimensionLearnsOptimalGain) {
    const auto r = run_case1(config(), {6, 2}, noise(), SamplingConfig{0.05, 400, 10}, 1e-6);
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.rows[0].n_hat, 2);  // sorted
    const auto* full = r.row(6);
    ASSERT_NE(full, nullptr);
    EXPECT_TRUE(full->error.empty()) << full->error;
    EXPECT_TRUE(full->converged);
    EXPECT_NEAR(full->J, r.J_opt, 1e-3 * r.J_opt);
    EXPECT_LE(full->semistable_residual, 1e-10);
    EXPECT_LE(full->eps_hat, 1e-10 * r.x_norm);
    EXPECT_EQ(r.config_hash.size(), 16u);
    EXPECT_EQ(r.open_loop_dominant.size(), 5u);
}

TEST_F(SmallExperiment, DeterministicModuloTiming) {
    const auto a = run_case1(config(), {2, 4}, noise(), SamplingConfig{0.05, 200, 5}, 0.01);
    ExperimentOptions o;
    o.parallel = true;
    const auto b = run_case1(config(), {4, 2}, noise(), SamplingConfig{0.05, 200, 5}, 0.01, o);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].n_hat, b.rows[i].n_hat);
        EXPECT_EQ(a.rows[i].gain, b.rows[i].gain);
        EXPECT_EQ(a.rows[i].J, b.rows[i].J);
        EXPECT_EQ(a.rows[i].eps_hat, b.rows[i].eps_hat);
    }
    EXPECT_EQ(a.config_hash, b.config_hash);
}

TEST_F(SmallExperiment, RankGateRecordedAsRowError) {
    NoiseConfig nc = noise();
    nc.t_end = 0.05;
    const auto r = run_case1(config(), {6}, nc, SamplingConfig{0.05, 10, 5}, 0.01);
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_FALSE(r.rows[0].error.empty());
    EXPECT_TRUE(std::isinf(r.rows[0].J));
}

TEST(Experiment, RejectsOutOfRangeNHat) {
    ConsensusConfig c;
    c.area_sizes = {3, 3};
    c.inter_area_links = 1;
    EXPECT_THROW((void)run_case1(c, {6}, NoiseConfig{}, SamplingConfig{0.1, 10, 2}, 0.01), Error);
}

}  // namespace
}  // namespace netlqr
