#include "netlqr/precondition.hpp"

#include <cmath>

namespace netlqr {

ProjectionMatrix ProjectionMatrix::identity(long n) {
    ProjectionMatrix out;
    out.P = Matrix::Identity(n, n);
    out.numerical_rank = n;
    return out;
}

ProjectionMatrix ProjectionMatrix::deflation_only(const Vector& v) {
    ProjectionMatrix out;
    out.P = deflation_basis(v);
    out.deflation_vec = v;
    out.numerical_rank = out.P.rows();
    return out;
}

namespace {

struct LeftSingular {
    Matrix U;
    Vector values;
};

LeftSingular left_singular(const Matrix& X) {
    Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU);
    Matrix U = svd.matrixU();
    fix_column_signs(U);
    return {std::move(U), svd.singularValues()};
}

ProjectionMatrix from_left_singular(const Matrix& X, long n_hat) {
    require(n_hat >= 1 && n_hat <= X.rows(), "fit_projection: need 1 <= n_hat <= n");
    require(X.cols() >= n_hat, "fit_projection: fewer snapshots than n_hat");
    const LeftSingular ls = left_singular(X);
    ProjectionMatrix out;
    out.P = ls.U.leftCols(n_hat).transpose();
    out.singular_values = ls.values;
    out.numerical_rank = numerical_rank(ls.values);
    if (n_hat > out.numerical_rank) {
        out.warnings.push_back("n_hat = " + std::to_string(n_hat) + " exceeds the numerical rank " +
                               std::to_string(out.numerical_rank) +
                               " of the snapshot matrix; trailing directions are arbitrary");
    }
    return out;
}

}  // namespace

ProjectionMatrix fit_projection(std::span<const SnapshotRecord> records, long n_hat) {
    return from_left_singular(stack_coarse_states(records), n_hat);
}

ProjectionMatrix fit_projection(const SnapshotRecord& record, long n_hat) {
    return fit_projection(std::span<const SnapshotRecord>(&record, 1), n_hat);
}

Gramian empirical_gramian(std::span<const SnapshotRecord> responses) {
    require(!responses.empty(), "empirical_gramian: no responses");
    const auto& grid = responses.front().fine_times;
    const long n = responses.front().n();
    Matrix phi = Matrix::Zero(n, n);
    const double horizon = grid.back() - grid.front();
    require(horizon > 0.0, "empirical_gramian: zero horizon");
    for (const auto& rec : responses) {
        require(rec.fine_times == grid, "empirical_gramian: records must share the time grid");
        require_dims(rec.n() == n, "empirical_gramian: records disagree on n");
        Matrix second = Matrix::Zero(n, n);
        Vector first = Vector::Zero(n);
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const double h = grid[i + 1] - grid[i];
            const auto a = rec.states.col(static_cast<Eigen::Index>(i));
            const auto b = rec.states.col(static_cast<Eigen::Index>(i + 1));
            second.noalias() += 0.5 * h * (a * a.transpose() + b * b.transpose());
            first += 0.5 * h * (a + b);
        }
        // int (x - xbar)(x - xbar)^T = int x x^T - T xbar xbar^T,  xbar = first / T
        phi += second - first * first.transpose() / horizon;
    }
    return {symmetrize(phi), horizon};
}

ProjectionMatrix projection_from_gramian(const Gramian& input_gramian,
                                         const std::optional<Gramian>& disturbance_gramian, long n_hat) {
    Matrix phi = input_gramian.Phi;
    if (disturbance_gramian) {
        require_dims(disturbance_gramian->Phi.rows() == phi.rows(), "projection_from_gramian: dimension mismatch");
        phi += disturbance_gramian->Phi;
    }
    const long n = phi.rows();
    require(n_hat >= 1 && n_hat <= n, "projection_from_gramian: need 1 <= n_hat <= n");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(phi));
    // ascending -> descending
    Matrix vectors = eig.eigenvectors().rowwise().reverse();
    Vector values = eig.eigenvalues().reverse();
    fix_column_signs(vectors);
    ProjectionMatrix out;
    out.P = vectors.leftCols(n_hat).transpose();
    out.singular_values = values;
    const double top = std::max(values(0), 0.0);
    out.numerical_rank = static_cast<long>((values.array() > kRankTolerance * top).count());
    if (n_hat > out.numerical_rank) {
        out.warnings.push_back("n_hat exceeds the number of gramian eigenvalues above tolerance (" +
                               std::to_string(out.numerical_rank) + ")");
    }
    return out;
}

ProjectionMatrix deflate_semistable(std::span<const SnapshotRecord> records, const Vector& v, long n_hat) {
    const Matrix X = stack_coarse_states(records);
    require_dims(v.size() == X.rows(), "deflate_semistable: v length must equal n");
    require(v.norm() > 0.0, "deflate_semistable: v must be nonzero");
    require(n_hat >= 1 && n_hat < X.rows(), "deflate_semistable: need 1 <= n_hat <= n - 1");
    const Matrix vbar = deflation_basis(v);
    ProjectionMatrix reduced = from_left_singular(vbar * X, n_hat);
    reduced.P = reduced.P * vbar;
    reduced.deflation_vec = v;
    return reduced;
}

ProjectionMatrix deflate_semistable(const SnapshotRecord& record, const Vector& v, long n_hat) {
    return deflate_semistable(std::span<const SnapshotRecord>(&record, 1), v, n_hat);
}

double epsilon_hat(std::span<const SnapshotRecord> records, const ProjectionMatrix& projection) {
    const Matrix X = stack_coarse_states(records);
    require_dims(projection.n() == X.rows(), "epsilon_hat: projection width must equal n");
    // (I - P^T P) restricted to the deflated coordinates; with v present the
    // discarded complement excludes the semi-stable direction itself.
    Matrix residual = X - projection.P.transpose() * (projection.P * X);
    if (projection.deflation_vec) {
        const Vector vhat = *projection.deflation_vec / projection.deflation_vec->norm();
        residual -= vhat * (vhat.transpose() * X);
    }
    return residual.norm();
}

double epsilon_hat(const SnapshotRecord& record, const ProjectionMatrix& projection) {
    return epsilon_hat(std::span<const SnapshotRecord>(&record, 1), projection);
}

double epsilon_hat_from_spectrum(const ProjectionMatrix& projection) {
    const Vector& s = projection.singular_values;
    double tail = 0.0;
    for (Eigen::Index i = projection.n_hat(); i < s.size(); ++i) {
        tail += s(i) * s(i);
    }
    return std::sqrt(tail);
}

}  // namespace netlqr
