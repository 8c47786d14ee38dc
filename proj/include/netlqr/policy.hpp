#pragma once

#include "netlqr/precondition.hpp"

#include <limits>

namespace netlqr {

/// Quadratic cost weights: J = int x^T Q x + u^T R u dt.
struct LqrWeights {
    Matrix Q;
    Matrix R;

    /// Q_hat = (P^dagger)^T Q P^dagger = P Q P^T for row-orthonormal P.
    [[nodiscard]] LqrWeights reduced(const ProjectionMatrix& projection) const;

    /// Symmetry / definiteness checks; with v given, also Q v = 0.
    void validate(const std::optional<Vector>& semistable_vec = std::nullopt) const;
};

struct RankReport {
    long rank = 0;
    long required = 0;
    bool satisfied = false;
};

/// Numerical rank of [rho sigma] against d(d+1)/2 + m d.
[[nodiscard]] RankReport rank_check(const DataMatrices& data);

struct StepOptions {
    double rcond = 1e-12;
    /// Throw RankError when Theta_k is rank deficient.
    bool require_full_rank = true;
    /// Throw NumericalError when ||Theta x - z|| > max_relative_residual ||z||.
    /// Infinity disables the check.
    double max_relative_residual = 1e-6;
};

struct StepResult {
    Matrix W;       // d x d symmetric
    Matrix F_next;  // m x d
    long theta_rank = 0;
    double relative_residual = 0.0;
};

/// One least-squares Kleinman update from data.
[[nodiscard]] StepResult policy_improvement_step(const DataMatrices& data, const Matrix& F_k,
                                                 const LqrWeights& weights, const StepOptions& options = {});

/// Builds Theta_k and z_k (W half-vectorized) -- exposed for testing.
void assemble_theta(const DataMatrices& data, const Matrix& F_k, const LqrWeights& weights, Matrix& theta,
                    Vector& rhs);

struct PolicyOptions {
    double kappa = 0.01;
    long max_iter = 50;
    double divergence_threshold = 1e6;
    /// Proceed with the minimum-norm solution when the rank condition fails.
    bool force_minnorm = false;
    double rcond = 1e-12;
    /// Per-step residual gate; disabled by default (lossy compressed data is
    /// inconsistent by construction).
    double max_relative_residual = std::numeric_limits<double>::infinity();
};

struct PolicyResult {
    std::vector<Matrix> gains;   // F_0 = 0, F_1, ..., F_K   (m x d)
    std::vector<Matrix> values;  // W_0, ..., W_{K-1}         (d x d)
    std::vector<double> residuals;
    std::vector<double> relative_ls_residuals;
    std::vector<double> timings_ms;
    long iter_count = 0;
    bool converged = false;
    bool diverged = false;
    long n_hat = 0;
    Matrix lifted_gain;  // m x n
    RankReport rank;
    std::vector<std::string> warnings;
};

/// Off-policy iteration on raw (or already compressed) data, F_0 = 0.
[[nodiscard]] PolicyResult run_off_policy(const DataMatrices& data, const LqrWeights& weights,
                                          const PolicyOptions& options = {});

/// Preconditioned iteration: compress the record with P, learn F_hat on the
/// n_hat-dimensional data with Q_hat, and lift F = F_hat P.
[[nodiscard]] PolicyResult run_preconditioned(const SnapshotRecord& record, const ProjectionMatrix& projection,
                                              const LqrWeights& weights, const PolicyOptions& options = {});

/// Same, with data matrices already compressed by `projection`.
[[nodiscard]] PolicyResult run_preconditioned(const DataMatrices& compressed, const ProjectionMatrix& projection,
                                              const LqrWeights& weights, const PolicyOptions& options = {});

}  // namespace netlqr
