#include "netlqr/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace netlqr {

void require(bool condition, const std::string& message) {
    if (!condition) {
        throw Error(message);
    }
}

void require_dims(bool condition, const std::string& message) {
    if (!condition) {
        throw DimensionError(message);
    }
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

void fix_column_signs(Matrix& columns) {
    for (Eigen::Index c = 0; c < columns.cols(); ++c) {
        const double scale = columns.col(c).cwiseAbs().maxCoeff();
        if (scale == 0.0) {
            continue;
        }
        for (Eigen::Index r = 0; r < columns.rows(); ++r) {
            const double value = columns(r, c);
            if (std::abs(value) > 1e-10 * scale) {
                if (value < 0.0) {
                    columns.col(c) *= -1.0;
                }
                break;
            }
        }
    }
}

Matrix deflation_basis(const Vector& v) {
    const Eigen::Index n = v.size();
    require_dims(n >= 2, "deflation_basis: need n >= 2");
    require(v.norm() > 0.0, "deflation_basis: zero vector");
    Matrix stacked(n, n + 1);
    stacked.col(0) = v / v.norm();
    stacked.rightCols(n) = Matrix::Identity(n, n);
    Eigen::HouseholderQR<Matrix> qr(stacked);
    Matrix q = qr.householderQ();
    Matrix complement = q.rightCols(n - 1);
    fix_column_signs(complement);
    return complement.transpose();
}

Matrix orthonormal_complement(const Matrix& P) {
    const Eigen::Index k = P.rows();
    const Eigen::Index n = P.cols();
    if (k >= n) {
        return Matrix(0, n);
    }
    Matrix stacked(n, k + n);
    stacked.leftCols(k) = P.transpose();
    stacked.rightCols(n) = Matrix::Identity(n, n);
    Eigen::HouseholderQR<Matrix> qr(stacked);
    Matrix q = qr.householderQ();
    Matrix complement = q.rightCols(n - k);
    fix_column_signs(complement);
    return complement.transpose();
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

std::vector<Complex> eigenvalues(const Matrix& a) {
    std::vector<Complex> out;
    if (a.rows() == 0) {
        return out;
    }
    Eigen::EigenSolver<Matrix> solver(a, false);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigenvalue computation did not converge");
    }
    const auto& values = solver.eigenvalues();
    out.assign(values.data(), values.data() + values.size());
    return out;
}

double spectral_abscissa(const Matrix& a) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& value : eigenvalues(a)) {
        best = std::max(best, value.real());
    }
    return best;
}

bool is_hurwitz(const Matrix& a) { return a.rows() == 0 || spectral_abscissa(a) < 0.0; }

Matrix smat(const Vector& w, long d) {
    require_dims(w.size() == svec_size(d), "smat: size mismatch");
    Matrix out(d, d);
    for (long i = 0; i < d; ++i) {
        for (long j = i; j < d; ++j) {
            out(i, j) = w(svec_index(i, j, d));
            out(j, i) = out(i, j);
        }
    }
    return out;
}

namespace {

// Square triangular factor of the short side: a = Q R (tall) or a^T = Q R (wide).
// Singular values of R equal those of a; the SVD then runs on a min(rows, cols)
// square instead of the full rectangle.
struct ShortSideFactor {
    Eigen::HouseholderQR<Matrix> qr;
    Matrix R;
    bool transposed = false;
};

ShortSideFactor short_side_factor(const Matrix& a) {
    ShortSideFactor f;
    f.transposed = a.rows() < a.cols();
    if (f.transposed) {
        f.qr.compute(a.transpose());
    } else {
        f.qr.compute(a);
    }
    const Eigen::Index k = std::min(a.rows(), a.cols());
    f.R = f.qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return f;
}

}  // namespace

LeastSquaresSolution solve_min_norm(const Matrix& a, const Vector& b, double rcond) {
    require_dims(a.rows() == b.size(), "solve_min_norm: rhs length mismatch");
    const Eigen::Index rows = a.rows();
    const Eigen::Index cols = a.cols();
    LeastSquaresSolution out;
    if (rows == 0 || cols == 0) {
        out.x = Vector::Zero(cols);
        out.relative_residual = b.size() > 0 && b.norm() > 0.0 ? 1.0 : 0.0;
        return out;
    }
    const ShortSideFactor f = short_side_factor(a);
    const Eigen::Index k = f.R.rows();
    Eigen::BDCSVD<Matrix> svd(f.R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double cutoff = rcond * s(0);
    Vector s_inv = Vector::Zero(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        if (s(i) > cutoff && s(i) > 0.0) {
            s_inv(i) = 1.0 / s(i);
            ++out.rank;
        }
    }
    if (!f.transposed) {
        // a = Q U S V^T  =>  x = V S^+ U^T (Q^T b)_k
        Vector qtb = b;
        qtb.applyOnTheLeft(f.qr.householderQ().transpose());
        out.x = svd.matrixV() * (s_inv.asDiagonal() * (svd.matrixU().transpose() * qtb.head(k)));
    } else {
        // a = R^T Q^T = V S U^T Q^T  =>  x = Q [U S^+ V^T b; 0]
        Vector w = Vector::Zero(cols);
        w.head(k) = svd.matrixU() * (s_inv.asDiagonal() * (svd.matrixV().transpose() * b));
        w.applyOnTheLeft(f.qr.householderQ());
        out.x = std::move(w);
    }
    const double bnorm = b.norm();
    const double res = (a * out.x - b).norm();
    out.relative_residual = bnorm > 0.0 ? res / bnorm : res;
    return out;
}

Vector singular_values(const Matrix& a) {
    if (a.size() == 0) {
        return Vector(0);
    }
    const ShortSideFactor f = short_side_factor(a);
    return Eigen::BDCSVD<Matrix>(f.R).singularValues();
}

long numerical_rank(const Vector& sv, double relative_tolerance) {
    if (sv.size() == 0 || sv(0) <= 0.0) {
        return 0;
    }
    const double cutoff = relative_tolerance * sv(0);
    return static_cast<long>((sv.array() > cutoff).count());
}

namespace {

Matrix orthonormal_basis(const Matrix& a) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
    const long r = numerical_rank(svd.singularValues(), 1e-10);
    return svd.matrixU().leftCols(r);
}

}  // namespace

double max_principal_angle(const Matrix& a, const Matrix& b) {
    const Matrix qa = orthonormal_basis(a);
    const Matrix qb = orthonormal_basis(b);
    if (qa.cols() != qb.cols()) {
        return M_PI / 2.0;
    }
    if (qa.cols() == 0) {
        return 0.0;
    }
    const Matrix residual = qa - qb * (qb.transpose() * qa);
    Eigen::JacobiSVD<Matrix> svd(residual);
    const double s = std::clamp(svd.singularValues()(0), 0.0, 1.0);
    return std::asin(s);
}

}  // namespace netlqr
