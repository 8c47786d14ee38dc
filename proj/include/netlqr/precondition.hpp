#pragma once

#include "netlqr/lti_sim.hpp"

namespace netlqr {

/// Row-orthonormal compression map xi = P x (n_hat x n). P^dagger = P^T.
struct ProjectionMatrix {
    Matrix P;
    /// Semi-stable direction removed before fitting; P v = 0 when present.
    std::optional<Vector> deflation_vec;
    /// Singular values of the (possibly deflated) snapshot matrix, or gramian
    /// eigenvalues when built from a gramian.
    Vector singular_values;
    /// Numerical rank of the fitted data (relative tolerance kRankTolerance).
    long numerical_rank = 0;
    std::vector<std::string> warnings;

    [[nodiscard]] long n_hat() const { return P.rows(); }
    [[nodiscard]] long n() const { return P.cols(); }

    /// Identity projection (n_hat = n).
    static ProjectionMatrix identity(long n);
    /// Pure deflation (n_hat = n - 1): P = Vbar.
    static ProjectionMatrix deflation_only(const Vector& v);
};

struct Gramian {
    Matrix Phi;
    double horizon = 0.0;
};

/// Regressors of the off-policy least-squares problem. Row j of phi / sigma is
/// the column-major vec of a d x d matrix; row j of rho is vec of an m x d matrix.
struct DataMatrices {
    RowMatrix phi;    // N x d^2
    RowMatrix rho;    // N x (d m)
    RowMatrix sigma;  // N x d^2
    long d = 0;
    long m = 0;
    std::vector<double> sample_times;  // t_0 .. t_N

    [[nodiscard]] long num_samples() const { return phi.rows(); }
};

/// Top-n_hat left singular vectors of the stacked coarse snapshots.
[[nodiscard]] ProjectionMatrix fit_projection(std::span<const SnapshotRecord> records, long n_hat);
[[nodiscard]] ProjectionMatrix fit_projection(const SnapshotRecord& record, long n_hat);

/// Mean-subtracted empirical controllability gramian from zero-input responses.
[[nodiscard]] Gramian empirical_gramian(std::span<const SnapshotRecord> responses);

[[nodiscard]] ProjectionMatrix projection_from_gramian(const Gramian& input_gramian,
                                                       const std::optional<Gramian>& disturbance_gramian, long n_hat);

/// Removes the semi-stable direction v, fits P_c on Vbar X and returns P = P_c Vbar.
[[nodiscard]] ProjectionMatrix deflate_semistable(std::span<const SnapshotRecord> records, const Vector& v,
                                                  long n_hat);
[[nodiscard]] ProjectionMatrix deflate_semistable(const SnapshotRecord& record, const Vector& v, long n_hat);

/// phi, rho, sigma of z = P x (or z = x without P), trapezoid on the fine grid.
/// Rows are assembled in parallel (OpenMP), each row by a single thread.
[[nodiscard]] DataMatrices build_data_matrices(const SnapshotRecord& record,
                                               const ProjectionMatrix* projection = nullptr);

/// Serial reference: explicit Kronecker products per fine point. Kept for
/// testing and benchmarking the parallel kernel.
[[nodiscard]] DataMatrices build_data_matrices_reference(const SnapshotRecord& record,
                                                         const ProjectionMatrix* projection = nullptr);

/// Data-only compression error: Frobenius norm of the discarded part of the
/// (deflated) snapshots.
[[nodiscard]] double epsilon_hat(std::span<const SnapshotRecord> records, const ProjectionMatrix& projection);
[[nodiscard]] double epsilon_hat(const SnapshotRecord& record, const ProjectionMatrix& projection);

/// Same quantity from the stored singular values: sqrt(sum_{i > n_hat} s_i^2).
[[nodiscard]] double epsilon_hat_from_spectrum(const ProjectionMatrix& projection);

}  // namespace netlqr
