#include "netlqr/policy.hpp"

#include <chrono>
#include <cmath>

namespace netlqr {

LqrWeights LqrWeights::reduced(const ProjectionMatrix& projection) const {
    require_dims(projection.n() == Q.rows(), "LqrWeights::reduced: projection width must equal n");
    return {symmetrize(projection.P * Q * projection.P.transpose()), R};
}

void LqrWeights::validate(const std::optional<Vector>& semistable_vec) const {
    require_dims(Q.rows() == Q.cols() && R.rows() == R.cols(), "LqrWeights: Q and R must be square");
    const double qscale = std::max(Q.norm(), 1.0);
    require((Q - Q.transpose()).norm() <= 1e-12 * qscale, "LqrWeights: Q must be symmetric");
    require((R - R.transpose()).norm() <= 1e-12 * std::max(R.norm(), 1.0), "LqrWeights: R must be symmetric");
    if (Q.rows() > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> qe(Q, Eigen::EigenvaluesOnly);
        require(qe.eigenvalues().minCoeff() >= -1e-10 * qscale, "LqrWeights: Q must be positive semi-definite");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> re(R, Eigen::EigenvaluesOnly);
    require(re.eigenvalues().minCoeff() > 0.0, "LqrWeights: R must be positive definite");
    if (semistable_vec) {
        require_dims(semistable_vec->size() == Q.rows(), "LqrWeights: v length must equal n");
        require((Q * *semistable_vec).norm() <= 1e-10 * qscale * semistable_vec->norm(),
                "LqrWeights: Q v != 0 (ker Q must contain the semi-stable direction)");
    }
}

RankReport rank_check(const DataMatrices& data) {
    const long d = data.d;
    const long m = data.m;
    const long N = data.num_samples();
    RankReport report;
    report.required = svec_size(d) + m * d;
    // sigma rows are symmetric, so its column space is spanned by the half-vectorized columns
    Matrix stacked(N, m * d + svec_size(d));
    stacked.leftCols(m * d) = data.rho;
    for (long i = 0; i < d; ++i) {
        for (long k = i; k < d; ++k) {
            stacked.col(m * d + svec_index(i, k, d)) = data.sigma.col(i + k * d);
        }
    }
    report.rank = numerical_rank(singular_values(stacked));
    report.satisfied = N >= report.required && report.rank >= report.required;
    return report;
}

void assemble_theta(const DataMatrices& data, const Matrix& F_k, const LqrWeights& weights, Matrix& theta,
                    Vector& rhs) {
    const long d = data.d;
    const long m = data.m;
    const long N = data.num_samples();
    require_dims(F_k.rows() == m && F_k.cols() == d, "policy_improvement_step: F_k must be m x d");
    require_dims(weights.Q.rows() == d && weights.R.rows() == m, "policy_improvement_step: weight dimensions");
    const long nw = svec_size(d);
    theta.resize(N, nw + m * d);
    rhs.resize(N);

    const Matrix& R = weights.R;
    const Matrix RF = R * F_k;
    const Matrix Qk = weights.Q + F_k.transpose() * RF;

#pragma omp parallel for schedule(static)
    for (long j = 0; j < N; ++j) {
        const Eigen::Map<const Matrix> phi_j(data.phi.row(j).data(), d, d);
        const Eigen::Map<const Matrix> sigma_j(data.sigma.row(j).data(), d, d);
        const Eigen::Map<const Matrix> rho_j(data.rho.row(j).data(), m, d);

        for (long i = 0; i < d; ++i) {
            theta(j, svec_index(i, i, d)) = phi_j(i, i);
            for (long k = i + 1; k < d; ++k) {
                theta(j, svec_index(i, k, d)) = phi_j(i, k) + phi_j(k, i);
            }
        }
        // -2 rho_j (I (x) R) - 2 sigma_j (I (x) F_k^T R)  ==  -2 vec(R rho_j + R F_k sigma_j)
        const Matrix block = -2.0 * (R * rho_j + RF * sigma_j);
        for (long c = 0; c < d; ++c) {
            for (long r = 0; r < m; ++r) {
                theta(j, nw + r + c * m) = block(r, c);
            }
        }
        rhs(j) = -(sigma_j.array() * Qk.array()).sum();
    }
}

StepResult policy_improvement_step(const DataMatrices& data, const Matrix& F_k, const LqrWeights& weights,
                                   const StepOptions& options) {
    Matrix theta;
    Vector rhs;
    assemble_theta(data, F_k, weights, theta, rhs);
    const long d = data.d;
    const long m = data.m;
    const long unknowns = theta.cols();

    const LeastSquaresSolution sol = solve_min_norm(theta, rhs, options.rcond);
    if (options.require_full_rank && sol.rank < unknowns) {
        throw RankError("policy_improvement_step: Theta_k has rank " + std::to_string(sol.rank) + " < required " +
                            std::to_string(unknowns),
                        sol.rank, unknowns);
    }
    if (sol.relative_residual > options.max_relative_residual) {
        throw NumericalError("policy_improvement_step: least-squares residual " +
                             std::to_string(sol.relative_residual) + " exceeds tolerance (inconsistent data?)");
    }
    StepResult out;
    out.W = smat(sol.x.head(svec_size(d)), d);
    out.F_next = Eigen::Map<const Matrix>(sol.x.data() + svec_size(d), m, d);
    out.theta_rank = sol.rank;
    out.relative_residual = sol.relative_residual;
    return out;
}

namespace {

PolicyResult iterate(const DataMatrices& data, const LqrWeights& weights, const PolicyOptions& options) {
    require(options.kappa >= 0.0 && options.max_iter >= 1, "policy iteration: invalid kappa / max_iter");
    PolicyResult result;
    result.n_hat = data.d;
    result.rank = rank_check(data);
    if (!result.rank.satisfied) {
        const std::string msg = "rank[rho sigma] = " + std::to_string(result.rank.rank) + " with N = " +
                                std::to_string(data.num_samples()) + " samples; required " +
                                std::to_string(result.rank.required);
        if (!options.force_minnorm) {
            throw RankError("rank condition violated: " + msg, result.rank.rank, result.rank.required);
        }
        result.warnings.push_back(msg + "; continuing with the minimum-norm solution");
    }

    StepOptions step_options;
    step_options.rcond = options.rcond;
    step_options.require_full_rank = false;
    step_options.max_relative_residual = options.max_relative_residual;

    Matrix F = Matrix::Zero(data.m, data.d);
    result.gains.push_back(F);
    for (long k = 0; k < options.max_iter; ++k) {
        const auto start = std::chrono::steady_clock::now();
        StepResult step = policy_improvement_step(data, F, weights, step_options);
        const auto stop = std::chrono::steady_clock::now();
        result.timings_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());

        const double change = (step.F_next - F).norm();
        F = step.F_next;
        result.values.push_back(std::move(step.W));
        result.gains.push_back(F);
        result.residuals.push_back(change);
        result.relative_ls_residuals.push_back(step.relative_residual);
        result.iter_count = k + 1;
        if (!F.allFinite() || F.norm() > options.divergence_threshold) {
            result.diverged = true;
            result.warnings.push_back("gain norm exceeded the divergence threshold at iteration " +
                                      std::to_string(k + 1));
            break;
        }
        if (change <= options.kappa) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace

PolicyResult run_off_policy(const DataMatrices& data, const LqrWeights& weights, const PolicyOptions& options) {
    PolicyResult result = iterate(data, weights, options);
    result.lifted_gain = result.gains.back();
    return result;
}

PolicyResult run_preconditioned(const DataMatrices& compressed, const ProjectionMatrix& projection,
                                const LqrWeights& weights, const PolicyOptions& options) {
    require_dims(compressed.d == projection.n_hat(), "run_preconditioned: data dimension must equal n_hat");
    weights.validate(projection.deflation_vec);
    const LqrWeights reduced = weights.reduced(projection);
    PolicyResult result = iterate(compressed, reduced, options);
    result.lifted_gain = result.gains.back() * projection.P;
    result.warnings.insert(result.warnings.begin(), projection.warnings.begin(), projection.warnings.end());
    return result;
}

PolicyResult run_preconditioned(const SnapshotRecord& record, const ProjectionMatrix& projection,
                                const LqrWeights& weights, const PolicyOptions& options) {
    const DataMatrices compressed = build_data_matrices(record, &projection);
    return run_preconditioned(compressed, projection, weights, options);
}

}  // namespace netlqr
