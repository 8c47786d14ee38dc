#include "netlqr/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace netlqr {
namespace {

Matrix random_matrix(long rows, long cols, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix m(rows, cols);
    for (long j = 0; j < cols; ++j)
        for (long i = 0; i < rows; ++i) m(i, j) = g(rng);
    return m;
}

TEST(Svec, IndexCoversUpperTriangleOnce) {
    const long d = 5;
    std::vector<int> hit(svec_size(d), 0);
    for (long i = 0; i < d; ++i)
        for (long j = i; j < d; ++j) ++hit[svec_index(i, j, d)];
    for (int h : hit) EXPECT_EQ(h, 1);
    EXPECT_EQ(svec_index(0, 0, d), 0);
    EXPECT_EQ(svec_index(d - 1, d - 1, d), svec_size(d) - 1);
}

TEST(Svec, SmatIsSymmetric) {
    Vector w(3);
    w << 1, 2, 3;  // [[1, 2], [2, 3]]
    const Matrix W = smat(w, 2);
    EXPECT_DOUBLE_EQ(W(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(W(1, 0), 2.0);
    EXPECT_DOUBLE_EQ(W(1, 1), 3.0);
}

TEST(MinNorm, TallFullRankMatchesNormalEquations) {
    const Matrix A = random_matrix(40, 6, 1);
    const Vector b = random_matrix(40, 1, 2);
    const auto sol = solve_min_norm(A, b, 1e-12);
    const Vector ref = (A.transpose() * A).ldlt().solve(A.transpose() * b);
    EXPECT_EQ(sol.rank, 6);
    EXPECT_LT((sol.x - ref).norm(), 1e-10 * ref.norm());
    EXPECT_NEAR(sol.relative_residual, (A * ref - b).norm() / b.norm(), 1e-10);
}

TEST(MinNorm, WideSystemReturnsMinimumNormSolution) {
    const Matrix A = random_matrix(4, 9, 3);
    const Vector b = random_matrix(4, 1, 4);
    const auto sol = solve_min_norm(A, b, 1e-12);
    // x = A^T (A A^T)^{-1} b
    const Vector ref = A.transpose() * (A * A.transpose()).ldlt().solve(b);
    EXPECT_EQ(sol.rank, 4);
    EXPECT_LT((sol.x - ref).norm(), 1e-10 * ref.norm());
    EXPECT_LT(sol.relative_residual, 1e-12);
}

TEST(MinNorm, RankDeficientDropsNullspace) {
    // Two identical columns: the min-norm solution splits the weight evenly.
    Matrix A(3, 2);
    A << 1, 1, 2, 2, 3, 3;
    Vector b(3);
    b << 2, 4, 6;
    const auto sol = solve_min_norm(A, b, 1e-10);
    EXPECT_EQ(sol.rank, 1);
    EXPECT_NEAR(sol.x(0), 1.0, 1e-12);
    EXPECT_NEAR(sol.x(1), 1.0, 1e-12);
}

TEST(MinNorm, IllConditionedResidualNoWorseThanZero) {
    // Graded columns spanning 14 orders of magnitude.
    Matrix A = random_matrix(60, 12, 5);
    for (long j = 0; j < A.cols(); ++j) A.col(j) *= std::pow(10.0, -static_cast<double>(j) * 14.0 / 11.0);
    const Vector b = A * Vector::Ones(12) + 1e-3 * random_matrix(60, 1, 6);
    const auto sol = solve_min_norm(A, b, 1e-12);
    EXPECT_LT(sol.relative_residual, 1.0);
    EXPECT_LT((A * sol.x - b).norm(), b.norm());
}

TEST(SingularValues, MatchJacobi) {
    const Matrix A = random_matrix(30, 7, 7);
    const Vector s = singular_values(A);
    const Vector ref = Eigen::JacobiSVD<Matrix>(A).singularValues();
    EXPECT_LT((s - ref).norm(), 1e-12 * ref(0));
    EXPECT_EQ(numerical_rank(s), 7);
}

TEST(DeflationBasis, OrthonormalAndAnnihilatesV) {
    const Vector v = Vector::Ones(6);
    const Matrix Vb = deflation_basis(v);
    ASSERT_EQ(Vb.rows(), 5);
    EXPECT_LT((Vb * Vb.transpose() - Matrix::Identity(5, 5)).norm(), 1e-13);
    EXPECT_LT((Vb * v).norm(), 1e-13);
}

TEST(OrthonormalComplement, CompletesBasis) {
    const Matrix Q = Eigen::HouseholderQR<Matrix>(random_matrix(7, 3, 8)).householderQ() * Matrix::Identity(7, 3);
    const Matrix P = Q.transpose();
    const Matrix Pc = orthonormal_complement(P);
    ASSERT_EQ(Pc.rows(), 4);
    EXPECT_LT((P * Pc.transpose()).norm(), 1e-13);
    EXPECT_LT((Pc * Pc.transpose() - Matrix::Identity(4, 4)).norm(), 1e-13);
}

TEST(PrincipalAngle, IdenticalAndOrthogonalSpans) {
    const Matrix a = random_matrix(5, 2, 9);
    EXPECT_LT(max_principal_angle(a, a * Matrix::Random(2, 2).cwiseAbs().eval() + 0 * a), 1e-6);
    Matrix e1 = Matrix::Zero(3, 1), e2 = Matrix::Zero(3, 1);
    e1(0) = 1;
    e2(1) = 1;
    EXPECT_NEAR(max_principal_angle(e1, e2), M_PI / 2, 1e-12);
}

TEST(Spectrum, HurwitzTest) {
    Matrix A(2, 2);
    A << -1, 5, 0, -2;
    EXPECT_TRUE(is_hurwitz(A));
    EXPECT_NEAR(spectral_abscissa(A), -1.0, 1e-12);
    A(1, 1) = 0.0;
    EXPECT_FALSE(is_hurwitz(A));
}

TEST(FixColumnSigns, FirstEntryPositive) {
    Matrix m(2, 2);
    m << -1, 0, 2, -3;
    fix_column_signs(m);
    EXPECT_GT(m(0, 0), 0);
    EXPECT_GT(m(1, 1), 0);  // first non-negligible entry of column 1
}

TEST(Errors, RankErrorCarriesCounts) {
    try {
        throw RankError("short", 3, 5);
    } catch (const Error& e) {
        const auto* r = dynamic_cast<const RankError*>(&e);
        ASSERT_NE(r, nullptr);
        EXPECT_EQ(r->rank(), 3);
        EXPECT_EQ(r->required(), 5);
    }
    EXPECT_THROW(require_dims(false, "x"), DimensionError);
    EXPECT_THROW(require(false, "x"), Error);
}

}  // namespace
}  // namespace netlqr
