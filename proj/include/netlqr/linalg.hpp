#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace netlqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Error hierarchy. Every failure surfaced by the library derives from Error.
// ---------------------------------------------------------------------------
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class RankError : public Error {
public:
    RankError(const std::string& what, long rank, long required)
        : Error(what), rank_(rank), required_(required) {}
    [[nodiscard]] long rank() const noexcept { return rank_; }
    [[nodiscard]] long required() const noexcept { return required_; }

private:
    long rank_;
    long required_;
};

void require(bool condition, const std::string& message);
void require_dims(bool condition, const std::string& message);

// Relative tolerance used for numerical rank decisions throughout.
inline constexpr double kRankTolerance = 1e-8;

[[nodiscard]] bool all_finite(const Matrix& m);

// Flip each column so that its first entry of non-negligible magnitude is positive.
void fix_column_signs(Matrix& columns);

// Orthonormal rows spanning the complement of v (n-1 x n), via QR of [v | I].
[[nodiscard]] Matrix deflation_basis(const Vector& v);

// Orthonormal rows spanning the orthogonal complement of the row space of an
// orthonormal-row matrix P.
[[nodiscard]] Matrix orthonormal_complement(const Matrix& P);

[[nodiscard]] Matrix symmetrize(const Matrix& m);

[[nodiscard]] std::vector<Complex> eigenvalues(const Matrix& a);
[[nodiscard]] double spectral_abscissa(const Matrix& a);
[[nodiscard]] bool is_hurwitz(const Matrix& a);

// Index of the (i, j), i <= j, entry in the half-vectorized symmetric unknown.
[[nodiscard]] inline long svec_index(long i, long j, long d) {
    // upper triangle, row by row
    return i * d - i * (i - 1) / 2 + (j - i);
}
[[nodiscard]] inline long svec_size(long d) { return d * (d + 1) / 2; }

[[nodiscard]] Matrix smat(const Vector& w, long d);

struct LeastSquaresSolution {
    Vector x;
    long rank = 0;
    double relative_residual = 0.0;
};

// Minimum-norm least-squares solution of A x = b (QR of the long side, then SVD).
// Singular values below rcond * sigma_max are treated as zero.
[[nodiscard]] LeastSquaresSolution solve_min_norm(const Matrix& a, const Vector& b, double rcond);

// Singular values of a (descending).
[[nodiscard]] Vector singular_values(const Matrix& a);

[[nodiscard]] long numerical_rank(const Vector& singular_values, double relative_tolerance = kRankTolerance);

// Largest principal angle (radians) between the column spans of a and b.
[[nodiscard]] double max_principal_angle(const Matrix& a, const Matrix& b);

}  // namespace netlqr
