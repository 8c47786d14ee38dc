#include "netlqr/precondition.hpp"

#include <unsupported/Eigen/KroneckerProduct>

namespace netlqr {

namespace {

Matrix compressed_states(const SnapshotRecord& record, const ProjectionMatrix* projection) {
    if (projection == nullptr) {
        return record.states;
    }
    require_dims(projection->n() == record.n(), "build_data_matrices: projection width must equal n");
    return projection->P * record.states;
}

DataMatrices allocate(const SnapshotRecord& record, long d) {
    const long N = record.num_intervals();
    require(N >= 1, "build_data_matrices: need at least one interval");
    for (long j = 0; j < N; ++j) {
        const long a = record.coarse_index[static_cast<std::size_t>(j)];
        const long b = record.coarse_index[static_cast<std::size_t>(j + 1)];
        require(b - a >= 1, "build_data_matrices: fewer than 2 fine points in an interval");
    }
    DataMatrices out;
    out.d = d;
    out.m = record.m();
    out.phi.setZero(N, d * d);
    out.rho.setZero(N, d * record.m());
    out.sigma.setZero(N, d * d);
    out.sample_times = record.coarse_times;
    return out;
}

}  // namespace

DataMatrices build_data_matrices(const SnapshotRecord& record, const ProjectionMatrix* projection) {
    const Matrix Z = compressed_states(record, projection);
    const long d = Z.rows();
    const long m = record.m();
    DataMatrices out = allocate(record, d);
    const long N = out.num_samples();
    const auto& t = record.fine_times;

#pragma omp parallel for schedule(dynamic, 4)
    for (long j = 0; j < N; ++j) {
        const long a = record.coarse_index[static_cast<std::size_t>(j)];
        const long b = record.coarse_index[static_cast<std::size_t>(j + 1)];
        const long count = b - a + 1;

        // trapezoid weights over the fine points a..b
        Vector w = Vector::Zero(count);
        for (long i = a; i < b; ++i) {
            const double half = 0.5 * (t[static_cast<std::size_t>(i + 1)] - t[static_cast<std::size_t>(i)]);
            w(i - a) += half;
            w(i - a + 1) += half;
        }
        const auto seg = Z.middleCols(a, count);

        Eigen::Map<Matrix> phi_j(out.phi.row(j).data(), d, d);
        phi_j.noalias() = Z.col(b) * Z.col(b).transpose();
        phi_j.noalias() -= Z.col(a) * Z.col(a).transpose();

        Eigen::Map<Matrix> sigma_j(out.sigma.row(j).data(), d, d);
        sigma_j.noalias() = seg * w.asDiagonal() * seg.transpose();

        // rho: right-continuous input at each interval start, left limit at its end
        Eigen::Map<Matrix> rho_j(out.rho.row(j).data(), m, d);
        for (long i = a; i < b; ++i) {
            const double half = 0.5 * (t[static_cast<std::size_t>(i + 1)] - t[static_cast<std::size_t>(i)]);
            rho_j.noalias() += half * record.inputs.col(i) * Z.col(i).transpose();
            rho_j.noalias() += half * record.inputs_left.col(i + 1) * Z.col(i + 1).transpose();
        }
    }
    return out;
}

DataMatrices build_data_matrices_reference(const SnapshotRecord& record, const ProjectionMatrix* projection) {
    const Matrix Z = compressed_states(record, projection);
    const long d = Z.rows();
    DataMatrices out = allocate(record, d);
    const long N = out.num_samples();
    const auto& t = record.fine_times;

    for (long j = 0; j < N; ++j) {
        const long a = record.coarse_index[static_cast<std::size_t>(j)];
        const long b = record.coarse_index[static_cast<std::size_t>(j + 1)];
        const Vector za = Z.col(a);
        const Vector zb = Z.col(b);
        out.phi.row(j) = (Eigen::kroneckerProduct(zb, zb) - Eigen::kroneckerProduct(za, za)).transpose();
        for (long i = a; i < b; ++i) {
            const double h = t[static_cast<std::size_t>(i + 1)] - t[static_cast<std::size_t>(i)];
            const Vector z0 = Z.col(i);
            const Vector z1 = Z.col(i + 1);
            const Vector u0 = record.inputs.col(i);
            const Vector u1 = record.inputs_left.col(i + 1);
            out.sigma.row(j) +=
                (0.5 * h * (Eigen::kroneckerProduct(z0, z0) + Eigen::kroneckerProduct(z1, z1))).transpose();
            out.rho.row(j) +=
                (0.5 * h * (Eigen::kroneckerProduct(z0, u0) + Eigen::kroneckerProduct(z1, u1))).transpose();
        }
    }
    return out;
}

}  // namespace netlqr
