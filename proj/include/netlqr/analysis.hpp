#pragma once

// Model-in-the-loop validation. Everything in this header reads the true
// (A, B); the learning path (precondition, policy) never does.

#include "netlqr/policy.hpp"

namespace netlqr {

/// G(s) = C (sI - A)^{-1} B + D.
struct StateSpace {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix D;

    [[nodiscard]] long states() const { return A.rows(); }
    [[nodiscard]] long inputs() const { return B.cols(); }
    [[nodiscard]] long outputs() const { return C.rows(); }
    [[nodiscard]] Eigen::MatrixXcd frequency_response(double omega) const;
    void validate() const;
};

/// Series connection: first feeds second (second * first).
[[nodiscard]] StateSpace series(const StateSpace& first, const StateSpace& second);

/// Solves A^T W + W A + M = 0 for Hurwitz A (complex Schur, Bartels-Stewart).
[[nodiscard]] Matrix lyapunov_solve(const Matrix& A, const Matrix& M);

/// Same equation by the Kronecker linearization (I (x) A^T + A^T (x) I) vec W = -vec M.
/// O(d^6); for small d only.
[[nodiscard]] Matrix lyapunov_solve_kron(const Matrix& A, const Matrix& M);

struct RiccatiSolution {
    Matrix W;
    Matrix F;
    long iterations = 0;
};

/// Kleinman's Newton iteration for A^T W + W A - W B R^{-1} B^T W + Q = 0.
[[nodiscard]] RiccatiSolution kleinman_riccati(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                                               const Matrix& F0, double tol = 1e-12, long max_iter = 100);

/// Coordinates eta_bar = Vbar x in which the semi-stable mode v is removed.
struct DeflatedPlant {
    Matrix Vbar;  // (n-1) x n, orthonormal rows, Vbar v = 0
    Matrix A;     // Vbar A Vbar^T
    Matrix B;     // Vbar B
    Matrix Q;     // Vbar Q Vbar^T
};

[[nodiscard]] DeflatedPlant deflate_plant(const Matrix& A, const Matrix& B, const Matrix& Q, const Vector& v);

/// Optimal LQR gain for a stable or semi-stable plant (deflated when v is given).
[[nodiscard]] RiccatiSolution optimal_gain(const LtiSystem& sys, const LqrWeights& weights, double tol = 1e-12);

struct CostValue {
    double J = std::numeric_limits<double>::infinity();
    bool stable = false;
};

/// J = x0^T W_cl x0 with W_cl the closed-loop cost-to-go. With v given and
/// (A - BF) v = 0 the cost is evaluated in deflated coordinates. Unstable
/// closed loops return J = +inf, stable = false.
[[nodiscard]] CostValue lqr_cost(const Matrix& A, const Matrix& B, const Matrix& F, const Matrix& Q,
                                 const Matrix& R, const Vector& x0, const std::optional<Vector>& v = std::nullopt);

[[nodiscard]] double h2_norm(const StateSpace& sys);

/// H-infinity norm by bisection on the Hamiltonian imaginary-eigenvalue test.
[[nodiscard]] double hinf_norm(const StateSpace& sys, double tol = 1e-6);

struct EpsilonBound {
    double hinf_term = 0.0;  // ||Pbar^T Pbar (sI - A)^{-1} B||_inf
    double h2_term = 0.0;    // ||Pbar^T Pbar (sI - A)^{-1} x0||_2
    [[nodiscard]] double value() const { return hinf_term + h2_term; }
};

/// Model-based compression error. Semi-stable plants are handled in deflated
/// coordinates when the projection carries its deflation vector.
[[nodiscard]] EpsilonBound epsilon_bound(const Matrix& A, const Matrix& B, const Vector& x0,
                                         const ProjectionMatrix& projection);

struct SmallGainCertificate {
    double lhs = 0.0;  // epsilon
    double rhs = 0.0;  // 1 / ||Sigma_cl Xi||_inf
    double margin = 0.0;
    bool certified = false;
    /// Theorem precondition: P A P^T and the reduced closed loop are Hurwitz.
    bool precondition_holds = false;
    /// Direct eigensolve of A - B F_hat P (deflated when semi-stable).
    bool closed_loop_stable = false;
    double closed_loop_abscissa = 0.0;
    /// Conservative performance-degradation constant (diagnostic only).
    double gamma = std::numeric_limits<double>::infinity();
};

/// gamma is only computed when weights are supplied.
[[nodiscard]] SmallGainCertificate small_gain_certificate(const Matrix& A, const Matrix& B, const Vector& x0,
                                                          const ProjectionMatrix& projection,
                                                          const Matrix& reduced_gain,
                                                          const LqrWeights* weights = nullptr);

/// Dense eigenvalues sorted by real part (descending), ties by imaginary part.
[[nodiscard]] std::vector<Complex> spectrum(const Matrix& A);

struct CostReport {
    double J = 0.0;
    double J_opt = 0.0;
    double J_hat = 0.0;
    double epsilon = 0.0;
    double epsilon_hat = 0.0;
    double small_gain_margin = 0.0;
    bool certified = false;
    bool stable = false;
    double gamma = 0.0;
    std::vector<Complex> closed_loop_spectrum;
    std::vector<Complex> open_loop_spectrum;
};

/// Reduced ideal cost J_hat of xi' = P A P^T xi + P B u under u = -F_hat xi.
[[nodiscard]] CostValue reduced_cost(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                                     const Vector& x0, const ProjectionMatrix& projection, const Matrix& reduced_gain);

/// Evaluates a reduced gain F_hat (lifted as F_hat P) against the true model.
[[nodiscard]] CostReport evaluate_controller(const LtiSystem& sys, const LqrWeights& weights, const Vector& x0,
                                             const ProjectionMatrix& projection, const Matrix& reduced_gain,
                                             double epsilon_hat_value);

}  // namespace netlqr
