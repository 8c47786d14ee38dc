#pragma once

// Experimental systems and the end-to-end sweep driver.

#include "netlqr/analysis.hpp"

#include <cstdint>

namespace netlqr {

struct ConsensusConfig {
    std::vector<long> area_sizes{30, 120};
    long inter_area_links = 4;
    /// Intra-area weights uniform in (lo, hi]; lo == hi gives constant weights.
    double intra_weight_lo = 0.0;
    double intra_weight_hi = 1.0;
    double inter_weight = 0.1;
    std::vector<long> actuated_nodes{0, 1};
    double alpha = 50.0;
    std::uint64_t seed = 1;
    /// Preferential-attachment degree of every new node.
    long attachment = 2;
    /// Redraw (seed + 1, ...) when the sampled graph is disconnected.
    bool regenerate_disconnected = true;

    void validate() const;
};

struct OscillatorConfig {
    long k_nodes = 10;
    double coupling_lo = 0.5;
    double coupling_hi = 1.5;
    double damping_lo = 0.5;
    double damping_hi = 1.0;
    std::vector<long> actuated{0};
    double alpha = 1.0;
    std::uint64_t seed = 1;

    void validate() const;
};

struct BenchmarkProblem {
    LtiSystem sys;
    LqrWeights weights;
    Vector x0;
};

/// Independent per-purpose stream from one base seed (splitmix64).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Weighted Laplacian of the two-area graph (exposed for tests).
[[nodiscard]] Matrix consensus_laplacian(const ConsensusConfig& cfg);

/// x' = -L x + B u with B = [e_i] over actuated nodes, Q = alpha sum_i (e_1 - e_i)(e_1 - e_i)^T, R = I.
[[nodiscard]] BenchmarkProblem gen_consensus(const ConsensusConfig& cfg);

/// Angle/frequency network theta' = w, w' = -L theta - D w + B u on a ring;
/// semi-stable direction v = [1 ... 1, 0 ... 0], Q penalizes frequencies only.
[[nodiscard]] BenchmarkProblem gen_oscillator_semistable(const OscillatorConfig& cfg);

struct SamplingConfig {
    double dt = 0.01;
    long intervals = 2000;
    long substeps = 10;
};

struct ExperimentOptions {
    /// Sweep rows concurrently. Learn timings are skewed when enabled.
    bool parallel = false;
    bool compute_epsilon = true;
    /// The performance constant needs an H-inf norm of a (2 n_hat + n)-state system.
    bool compute_gamma = false;
    long max_iter = 50;
    bool force_minnorm = false;
};

struct ExperimentRow {
    long n_hat = 0;
    long iterations = 0;
    double learn_time_ms = 0.0;
    double precondition_ms = 0.0;
    double J = std::numeric_limits<double>::infinity();
    double J_hat = std::numeric_limits<double>::infinity();
    double eps_hat = 0.0;
    std::optional<double> eps;
    double margin = 0.0;
    bool certified = false;
    bool converged = false;
    bool stable = false;
    /// ||(A - B F) v|| / ||v||, semi-stable plants only.
    double semistable_residual = 0.0;
    double gamma = std::numeric_limits<double>::infinity();
    std::vector<double> residuals;
    std::vector<double> timings_ms;
    Matrix gain;  // lifted, m x n
    std::string error;
};

struct ExperimentReport {
    std::vector<ExperimentRow> rows;  // sorted by n_hat
    double J_opt = 0.0;
    double x_norm = 0.0;
    /// Smallest n_hat with eps_hat < 1e-2 ||X||_F (the largest n_hat when none qualifies).
    long knee_n_hat = 0;
    std::vector<Complex> open_loop_dominant;
    std::vector<Complex> closed_loop_dominant;  // at the knee row
    std::vector<Complex> optimal_closed_loop_dominant;
    long n = 0;
    long m = 0;
    std::uint64_t graph_seed = 0;
    std::uint64_t noise_seed = 0;
    std::string config_hash;

    [[nodiscard]] const ExperimentRow* row(long n_hat) const;
};

/// One data-collection run, then one compressed learning run per n_hat,
/// evaluated with the true model. n_hat = n - 1 (semi-stable) or n is the
/// uncompressed baseline.
[[nodiscard]] ExperimentReport run_experiment(const BenchmarkProblem& problem, std::vector<long> n_hat_list,
                                              const NoiseConfig& noise, const SamplingConfig& sampling, double kappa,
                                              const ExperimentOptions& options = {});

[[nodiscard]] ExperimentReport run_case1(const ConsensusConfig& cfg, std::vector<long> n_hat_list,
                                         const NoiseConfig& noise, const SamplingConfig& sampling, double kappa,
                                         const ExperimentOptions& options = {});

/// FNV-1a over an arbitrary byte string, rendered as 16 hex digits.
[[nodiscard]] std::string fnv1a_hex(const std::string& bytes);

/// Leading eigenvalues by real part.
[[nodiscard]] std::vector<Complex> dominant_eigenvalues(const Matrix& A, std::size_t count);

}  // namespace netlqr
