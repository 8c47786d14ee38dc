#include "netlqr/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace netlqr {

namespace {

using CMatrix = Eigen::MatrixXcd;

double sigma_max(const CMatrix& g) {
    if (g.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<CMatrix> svd(g);
    return svd.singularValues()(0);
}

double sigma_max(const Matrix& g) {
    if (g.size() == 0) {
        return 0.0;
    }
    return Eigen::JacobiSVD<Matrix>(g).singularValues()(0);
}

// Frequency response evaluator on the Hessenberg form A = Q H Q^T, so that each
// evaluation costs O(n^2 m) instead of a dense factorization.
class HessenbergResponse {
public:
    explicit HessenbergResponse(const StateSpace& sys) : D_(sys.D.cast<Complex>()) {
        const long n = sys.states();
        if (n == 0) {
            return;
        }
        Eigen::HessenbergDecomposition<Matrix> hd(sys.A);
        const Matrix Q = hd.matrixQ();
        H_ = hd.matrixH();
        CQ_ = (sys.C * Q).cast<Complex>();
        QtB_ = (Q.transpose() * sys.B).cast<Complex>();
    }

    [[nodiscard]] CMatrix operator()(double omega) const {
        const long n = H_.rows();
        if (n == 0) {
            return D_;
        }
        // (j w I - H) X = Q^T B, Gaussian elimination with adjacent-row pivoting
        CMatrix M = -H_.cast<Complex>();
        M.diagonal().array() += Complex(0.0, omega);
        CMatrix X = QtB_;
        for (long k = 0; k + 1 < n; ++k) {
            if (std::abs(M(k + 1, k)) > std::abs(M(k, k))) {
                M.row(k).tail(n - k).swap(M.row(k + 1).tail(n - k));
                X.row(k).swap(X.row(k + 1));
            }
            if (M(k + 1, k) != Complex(0.0)) {
                const Complex l = M(k + 1, k) / M(k, k);
                M.row(k + 1).tail(n - k) -= l * M.row(k).tail(n - k);
                X.row(k + 1) -= l * X.row(k);
            }
        }
        X = M.triangularView<Eigen::Upper>().solve(X);
        return CQ_ * X + D_;
    }

private:
    Matrix H_;
    CMatrix CQ_;
    CMatrix QtB_;
    CMatrix D_;
};

struct ReducedCoordinates {
    Matrix A;
    Matrix B;
    Vector x0;
    Matrix P;  // n_hat x n_tilde
    std::optional<Matrix> Vbar;
};

// Deflated coordinates when the projection carries a semi-stable direction.
ReducedCoordinates reduced_coordinates(const Matrix& A, const Matrix& B, const Vector& x0,
                                       const ProjectionMatrix& projection) {
    require_dims(projection.n() == A.rows() && B.rows() == A.rows() && x0.size() == A.rows(),
                 "analysis: projection / plant dimension mismatch");
    if (!projection.deflation_vec) {
        return {A, B, x0, projection.P, std::nullopt};
    }
    const Matrix Vbar = deflation_basis(*projection.deflation_vec);
    return {Vbar * A * Vbar.transpose(), Vbar * B, Vbar * x0, projection.P * Vbar.transpose(), Vbar};
}

Matrix psd_sqrt(const Matrix& Q) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(Q));
    const Vector s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Eigen::MatrixXcd StateSpace::frequency_response(double omega) const {
    CMatrix M = -A.cast<Complex>();
    M.diagonal().array() += Complex(0.0, omega);
    const CMatrix X = M.partialPivLu().solve(B.cast<Complex>());
    return C.cast<Complex>() * X + D.cast<Complex>();
}

void StateSpace::validate() const {
    require_dims(A.rows() == A.cols(), "StateSpace: A must be square");
    require_dims(B.rows() == A.rows() && C.cols() == A.rows(), "StateSpace: B / C dimension mismatch");
    require_dims(D.rows() == C.rows() && D.cols() == B.cols(), "StateSpace: D must be outputs x inputs");
    require(all_finite(A) && all_finite(B) && all_finite(C) && all_finite(D), "StateSpace: non-finite entries");
}

StateSpace series(const StateSpace& first, const StateSpace& second) {
    first.validate();
    second.validate();
    require_dims(second.inputs() == first.outputs(), "series: output / input dimension mismatch");
    const long n1 = first.states();
    const long n2 = second.states();
    StateSpace out;
    out.A = Matrix::Zero(n1 + n2, n1 + n2);
    out.A.topLeftCorner(n1, n1) = first.A;
    out.A.bottomLeftCorner(n2, n1) = second.B * first.C;
    out.A.bottomRightCorner(n2, n2) = second.A;
    out.B.resize(n1 + n2, first.inputs());
    out.B.topRows(n1) = first.B;
    out.B.bottomRows(n2) = second.B * first.D;
    out.C.resize(second.outputs(), n1 + n2);
    out.C.leftCols(n1) = second.D * first.C;
    out.C.rightCols(n2) = second.C;
    out.D = second.D * first.D;
    return out;
}

RiccatiSolution kleinman_riccati(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                                 const Matrix& F0, double tol, long max_iter) {
    require_dims(A.rows() == A.cols() && B.rows() == A.rows() && F0.rows() == B.cols() && F0.cols() == A.rows(),
                 "kleinman_riccati: dimension mismatch");
    const Eigen::LLT<Matrix> Rllt(R);
    require(Rllt.info() == Eigen::Success, "kleinman_riccati: R must be positive definite");
    RiccatiSolution out;
    Matrix F = F0;
    bool converged = false;
    for (long k = 0; k < max_iter; ++k) {
        const Matrix Acl = A - B * F;
        if (!is_hurwitz(Acl)) {
            throw NumericalError("kleinman_riccati: iterate is not stabilizing");
        }
        out.W = lyapunov_solve(Acl, Q + F.transpose() * R * F);
        const Matrix next = Rllt.solve(B.transpose() * out.W);
        const double change = (next - F).norm();
        F = next;
        out.iterations = k + 1;
        if (change <= tol * std::max(1.0, F.norm())) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NumericalError("kleinman_riccati: no convergence in " + std::to_string(max_iter) + " iterations");
    }
    out.F = F;
    return out;
}

DeflatedPlant deflate_plant(const Matrix& A, const Matrix& B, const Matrix& Q, const Vector& v) {
    require_dims(v.size() == A.rows() && Q.rows() == A.rows(), "deflate_plant: dimension mismatch");
    DeflatedPlant out;
    out.Vbar = deflation_basis(v);
    out.A = out.Vbar * A * out.Vbar.transpose();
    out.B = out.Vbar * B;
    out.Q = symmetrize(out.Vbar * Q * out.Vbar.transpose());
    return out;
}

RiccatiSolution optimal_gain(const LtiSystem& sys, const LqrWeights& weights, double tol) {
    sys.validate();
    weights.validate(sys.semistable_eigvec);
    if (!sys.semistable_eigvec) {
        return kleinman_riccati(sys.A, sys.B, weights.Q, weights.R, Matrix::Zero(sys.m(), sys.n()), tol);
    }
    const DeflatedPlant plant = deflate_plant(sys.A, sys.B, weights.Q, *sys.semistable_eigvec);
    RiccatiSolution reduced =
        kleinman_riccati(plant.A, plant.B, plant.Q, weights.R, Matrix::Zero(sys.m(), plant.A.rows()), tol);
    reduced.F = reduced.F * plant.Vbar;
    reduced.W = symmetrize(plant.Vbar.transpose() * reduced.W * plant.Vbar);
    return reduced;
}

CostValue lqr_cost(const Matrix& A, const Matrix& B, const Matrix& F, const Matrix& Q, const Matrix& R,
                   const Vector& x0, const std::optional<Vector>& v) {
    require_dims(F.rows() == B.cols() && F.cols() == A.rows() && x0.size() == A.rows(),
                 "lqr_cost: dimension mismatch");
    CostValue out;
    if (!all_finite(F)) {
        return out;
    }
    const Matrix Acl = A - B * F;
    const Matrix M = Q + F.transpose() * R * F;
    if (v) {
        const double scale = v->norm();
        const bool invariant = (Acl * *v).norm() <= 1e-8 * std::max(Acl.norm(), 1.0) * scale;
        const bool unweighted = (M * *v).norm() <= 1e-8 * std::max(M.norm(), 1.0) * scale;
        if (invariant && unweighted) {
            const Matrix Vbar = deflation_basis(*v);
            const Matrix At = Vbar * Acl * Vbar.transpose();
            if (!is_hurwitz(At)) {
                return out;
            }
            const Vector e0 = Vbar * x0;
            const Matrix W = lyapunov_solve(At, Vbar * M * Vbar.transpose());
            out.J = e0.dot(W * e0);
            out.stable = true;
            return out;
        }
    }
    if (!is_hurwitz(Acl)) {
        return out;
    }
    const Matrix W = lyapunov_solve(Acl, M);
    out.J = x0.dot(W * x0);
    out.stable = true;
    return out;
}

double h2_norm(const StateSpace& sys) {
    sys.validate();
    require(sys.D.size() == 0 || sys.D.norm() == 0.0, "h2_norm: D must be zero");
    if (sys.states() == 0) {
        return 0.0;
    }
    if (!is_hurwitz(sys.A)) {
        throw NumericalError("h2_norm: A is not Hurwitz");
    }
    // A Phi + Phi A^T + B B^T = 0
    const Matrix Phi = lyapunov_solve(sys.A.transpose(), sys.B * sys.B.transpose());
    return std::sqrt(std::max(0.0, (sys.C * Phi * sys.C.transpose()).trace()));
}

double hinf_norm(const StateSpace& sys, double tol) {
    sys.validate();
    const long n = sys.states();
    const double d_norm = sigma_max(sys.D);
    if (n == 0 || sys.B.norm() == 0.0 || sys.C.norm() == 0.0) {
        return d_norm;
    }
    if (!is_hurwitz(sys.A)) {
        throw NumericalError("hinf_norm: A is not Hurwitz");
    }
    const HessenbergResponse response(sys);
    auto gain = [&](double w) { return sigma_max(response(w)); };

    // lower bound from a log grid spanning the modal frequencies
    const std::vector<Complex> poles = eigenvalues(sys.A);
    double wmin = std::numeric_limits<double>::infinity();
    double wmax = 0.0;
    for (const Complex& p : poles) {
        const double r = std::abs(p);
        if (r > 0.0) {
            wmin = std::min(wmin, r);
            wmax = std::max(wmax, r);
        }
    }
    if (!std::isfinite(wmin)) {
        wmin = wmax = 1.0;
    }
    const double lo = std::log10(wmin) - 2.0;
    const double hi = std::log10(wmax) + 2.0;
    constexpr int kGrid = 400;
    double lb = std::max(d_norm, gain(0.0));
    for (int i = 0; i < kGrid; ++i) {
        lb = std::max(lb, gain(std::pow(10.0, lo + (hi - lo) * i / (kGrid - 1))));
    }
    for (const Complex& p : poles) {
        lb = std::max(lb, gain(std::abs(p.imag())));
    }
    if (lb == 0.0) {
        return 0.0;
    }
    double ub = 1.5 * lb;

    const Matrix& A = sys.A;
    const Matrix& B = sys.B;
    const Matrix& C = sys.C;
    const Matrix& D = sys.D;
    const long m = sys.inputs();
    const long p = sys.outputs();

    // Hamiltonian test: j w is an eigenvalue of H(g) iff g is a singular value of G(j w).
    auto crossings = [&](double g) {
        const Matrix Rg = D.transpose() * D - g * g * Matrix::Identity(m, m);
        const Matrix Sg = D * D.transpose() - g * g * Matrix::Identity(p, p);
        const Eigen::PartialPivLU<Matrix> Rlu(Rg);
        const Eigen::PartialPivLU<Matrix> Slu(Sg);
        Matrix H(2 * n, 2 * n);
        H.topLeftCorner(n, n) = A - B * Rlu.solve(D.transpose() * C);
        H.topRightCorner(n, n) = -g * B * Rlu.solve(B.transpose());
        H.bottomLeftCorner(n, n) = g * C.transpose() * Slu.solve(C);
        H.bottomRightCorner(n, n) = -A.transpose() + C.transpose() * D * Rlu.solve(B.transpose());
        Eigen::EigenSolver<Matrix> es(H, false);
        std::vector<double> freqs;
        const double scale = std::max(1.0, H.norm());
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            const Complex ev = es.eigenvalues()(i);
            if (std::abs(ev.real()) <= 1e-6 * scale && ev.imag() >= 0.0) {
                freqs.push_back(ev.imag());
            }
        }
        std::sort(freqs.begin(), freqs.end());
        return freqs;
    };

    for (int it = 0; it < 200 && ub - lb > 2.0 * tol * lb; ++it) {
        // Bruinsma-Steinbuch step: test just above the current lower bound
        const double g = std::min(lb * (1.0 + 2.0 * tol), 0.5 * (lb + ub));
        const std::vector<double> freqs = crossings(g);
        double best = 0.0;
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            best = std::max(best, gain(freqs[i]));
            if (i + 1 < freqs.size()) {
                best = std::max(best, gain(0.5 * (freqs[i] + freqs[i + 1])));
            }
        }
        if (best > g) {
            lb = best;
            if (lb >= ub) {
                ub = 1.5 * lb;
            }
        } else {
            ub = g;
        }
    }
    return 0.5 * (lb + ub);
}

EpsilonBound epsilon_bound(const Matrix& A, const Matrix& B, const Vector& x0, const ProjectionMatrix& projection) {
    const ReducedCoordinates rc = reduced_coordinates(A, B, x0, projection);
    const long nt = rc.A.rows();
    const Matrix comp = Matrix::Identity(nt, nt) - rc.P.transpose() * rc.P;
    EpsilonBound out;
    if (comp.norm() <= 1e-12 * std::sqrt(static_cast<double>(nt))) {
        return out;
    }
    out.hinf_term = hinf_norm({rc.A, rc.B, comp, Matrix::Zero(nt, rc.B.cols())});
    out.h2_term = h2_norm({rc.A, rc.x0, comp, Matrix::Zero(nt, 1)});
    return out;
}

SmallGainCertificate small_gain_certificate(const Matrix& A, const Matrix& B, const Vector& x0,
                                            const ProjectionMatrix& projection, const Matrix& reduced_gain,
                                            const LqrWeights* weights) {
    const ReducedCoordinates rc = reduced_coordinates(A, B, x0, projection);
    const long nh = rc.P.rows();
    const long nt = rc.A.rows();
    const long m = rc.B.cols();
    require_dims(reduced_gain.rows() == m && reduced_gain.cols() == nh, "small_gain_certificate: F_hat must be m x n_hat");
    const Matrix& F = reduced_gain;

    SmallGainCertificate out;
    const Matrix Acl = rc.A - rc.B * F * rc.P;
    out.closed_loop_abscissa = nt > 0 ? spectral_abscissa(Acl) : -std::numeric_limits<double>::infinity();
    out.closed_loop_stable = is_hurwitz(Acl);

    const Matrix PAPt = rc.P * rc.A * rc.P.transpose();
    const Matrix PB = rc.P * rc.B;
    const Matrix AF = PAPt - PB * F;
    out.precondition_holds = is_hurwitz(rc.A) && is_hurwitz(PAPt) && is_hurwitz(AF);
    if (!out.precondition_holds) {
        out.rhs = 0.0;
        out.lhs = is_hurwitz(rc.A) ? epsilon_bound(A, B, x0, projection).value()
                                   : std::numeric_limits<double>::infinity();
        out.margin = -out.lhs;
        return out;
    }
    out.lhs = epsilon_bound(A, B, x0, projection).value();

    // Xi: r -> P A (sI - P A P^T)^{-1}-filtered state; Sigma_cl: reduced closed loop with input injection.
    const StateSpace xi{PAPt, rc.P * rc.A, Matrix::Identity(nh, nh), Matrix::Zero(nh, nt)};
    const StateSpace cl{AF, PB * F, -F, -F};
    const double loop = hinf_norm(series(xi, cl));
    out.rhs = loop > 0.0 ? 1.0 / loop : std::numeric_limits<double>::infinity();
    out.margin = out.rhs - out.lhs;
    out.certified = out.lhs < out.rhs;

    if (weights != nullptr) {
        Matrix Qt = weights->Q;
        if (rc.Vbar) {
            Qt = *rc.Vbar * weights->Q * rc.Vbar->transpose();
        }
        const Matrix Qh = psd_sqrt(Qt);
        const Matrix Rh = Eigen::LLT<Matrix>(weights->R).matrixU();
        const Matrix comp = Matrix::Identity(nt, nt) - rc.P.transpose() * rc.P;
        const Matrix BF = rc.B * F;

        // states [xi; e; x], input r
        const long ns = 2 * nh + nt;
        StateSpace g;
        g.A = Matrix::Zero(ns, ns);
        g.A.block(0, 0, nh, nh) = AF;
        g.A.block(0, nh, nh, nh) = -PB * F;
        g.A.block(nh, nh, nh, nh) = PAPt;
        g.A.block(nh, 2 * nh, nh, nt) = rc.P * rc.A * comp;
        g.A.block(2 * nh, 0, nt, nh) = -BF;
        g.A.block(2 * nh, nh, nt, nh) = -BF;
        g.A.block(2 * nh, 2 * nh, nt, nt) = rc.A;
        g.B = Matrix::Zero(ns, nt);
        g.B.block(nh, 0, nh, nt) = rc.P * rc.A;
        g.C = Matrix::Zero(nt + m, ns);
        g.C.block(0, 0, nt, nh) = Qh * rc.P.transpose();
        g.C.block(0, nh, nt, nh) = Qh * rc.P.transpose();
        g.C.block(0, 2 * nh, nt, nt) = Qh * comp;
        g.C.block(nt, 0, m, nh) = -Rh * F;
        g.C.block(nt, nh, m, nh) = -Rh * F;
        g.D = Matrix::Zero(nt + m, nt);
        g.D.topRows(nt) = Qh;
        if (is_hurwitz(g.A)) {
            const double h2 = h2_norm({AF, rc.P * rc.x0, F, Matrix::Zero(m, 1)});
            out.gamma = hinf_norm(g) * (1.0 + 2.0 * h2);
        }
    }
    return out;
}

std::vector<Complex> spectrum(const Matrix& A) {
    std::vector<Complex> ev = eigenvalues(A);
    std::sort(ev.begin(), ev.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) {
            return a.real() > b.real();
        }
        return a.imag() > b.imag();
    });
    return ev;
}

CostValue reduced_cost(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Vector& x0,
                       const ProjectionMatrix& projection, const Matrix& reduced_gain) {
    require_dims(projection.n() == A.rows(), "reduced_cost: projection width must equal n");
    const Matrix& P = projection.P;
    const Matrix Ahat = P * A * P.transpose();
    const Matrix Bhat = P * B;
    const Matrix Qhat = symmetrize(P * Q * P.transpose());
    return lqr_cost(Ahat, Bhat, reduced_gain, Qhat, R, P * x0);
}

CostReport evaluate_controller(const LtiSystem& sys, const LqrWeights& weights, const Vector& x0,
                               const ProjectionMatrix& projection, const Matrix& reduced_gain,
                               double epsilon_hat_value) {
    sys.validate();
    const Matrix F = reduced_gain * projection.P;
    CostReport out;
    const CostValue j = lqr_cost(sys.A, sys.B, F, weights.Q, weights.R, x0, sys.semistable_eigvec);
    out.J = j.J;
    out.stable = j.stable;
    const RiccatiSolution opt = optimal_gain(sys, weights);
    out.J_opt = lqr_cost(sys.A, sys.B, opt.F, weights.Q, weights.R, x0, sys.semistable_eigvec).J;
    out.J_hat = reduced_cost(sys.A, sys.B, weights.Q, weights.R, x0, projection, reduced_gain).J;
    out.epsilon_hat = epsilon_hat_value;

    ProjectionMatrix proj = projection;
    if (!proj.deflation_vec && sys.semistable_eigvec &&
        (proj.P * *sys.semistable_eigvec).norm() <= 1e-10 * sys.semistable_eigvec->norm()) {
        proj.deflation_vec = sys.semistable_eigvec;
    }
    const SmallGainCertificate cert = small_gain_certificate(sys.A, sys.B, x0, proj, reduced_gain, &weights);
    out.epsilon = cert.lhs;
    out.small_gain_margin = cert.margin;
    out.certified = cert.certified;
    out.gamma = cert.gamma;
    out.closed_loop_spectrum = spectrum(sys.A - sys.B * F);
    out.open_loop_spectrum = spectrum(sys.A);
    return out;
}

}  // namespace netlqr
