#include "netlqr/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace netlqr {

Matrix lyapunov_solve(const Matrix& A, const Matrix& M) {
    require_dims(A.rows() == A.cols() && M.rows() == A.rows() && M.cols() == A.cols(),
                 "lyapunov_solve: dimension mismatch");
    const Eigen::Index d = A.rows();
    if (d == 0) {
        return Matrix(0, 0);
    }
    Eigen::ComplexSchur<Matrix> schur(A);
    if (schur.info() != Eigen::Success) {
        throw NumericalError("lyapunov_solve: Schur decomposition failed");
    }
    const Eigen::MatrixXcd& T = schur.matrixT();
    const Eigen::MatrixXcd& U = schur.matrixU();
    for (Eigen::Index i = 0; i < d; ++i) {
        if (T(i, i).real() >= 0.0) {
            throw NumericalError("lyapunov_solve: matrix is not Hurwitz");
        }
    }

    // T^H Y + Y T = C,  C = -U^H M U,  W = U Y U^H
    const Eigen::MatrixXcd C = -(U.adjoint() * M.cast<Complex>() * U);
    const Eigen::MatrixXcd Th = T.adjoint();
    Eigen::MatrixXcd Y(d, d);
    Eigen::MatrixXcd shifted = Th;
    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::VectorXcd rhs = C.col(j);
        if (j > 0) {
            rhs.noalias() -= Y.leftCols(j) * T.col(j).head(j);
        }
        shifted.diagonal() = Th.diagonal().array() + T(j, j);
        Y.col(j) = shifted.triangularView<Eigen::Lower>().solve(rhs);
    }
    const Matrix W = (U * Y * U.adjoint()).real();
    return symmetrize(W);
}

Matrix lyapunov_solve_kron(const Matrix& A, const Matrix& M) {
    require_dims(A.rows() == A.cols() && M.rows() == A.rows() && M.cols() == A.cols(),
                 "lyapunov_solve_kron: dimension mismatch");
    const Eigen::Index d = A.rows();
    if (!is_hurwitz(A)) {
        throw NumericalError("lyapunov_solve_kron: matrix is not Hurwitz");
    }
    const Matrix I = Matrix::Identity(d, d);
    const Matrix At = A.transpose();
    const Matrix K = Eigen::kroneckerProduct(I, At) + Eigen::kroneckerProduct(At, I);
    const Vector rhs = -Eigen::Map<const Vector>(M.data(), d * d);
    const Vector w = K.partialPivLu().solve(rhs);
    return Eigen::Map<const Matrix>(w.data(), d, d);
}

}  // namespace netlqr
