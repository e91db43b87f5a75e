#include "romctl/mateq.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace romctl {
namespace mateq {

namespace {

constexpr double kHurwitzMargin = -1e-12;

void require_square(const Eigen::Ref<const Eigen::MatrixXd>& A,
                    const char* name) {
  if (A.rows() != A.cols()) {
    std::ostringstream os;
    os << name << " must be square, got " << A.rows() << "x" << A.cols();
    throw DimensionMismatch(os.str());
  }
}

// Solves T Y + Y T^H + F = 0 for upper-triangular T by back substitution over
// columns: (T + conj(T_kk) I) y_k = -f_k - sum_{i>k} conj(T_ki) y_i.
Eigen::MatrixXcd solve_triangular_lyapunov(const Eigen::MatrixXcd& T,
                                           const Eigen::MatrixXcd& F) {
  const Eigen::Index n = T.rows();
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd shifted = T;
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    Eigen::VectorXcd rhs = -F.col(k);
    for (Eigen::Index i = k + 1; i < n; ++i) {
      rhs -= std::conj(T(k, i)) * Y.col(i);
    }
    shifted.diagonal() = T.diagonal().array() + std::conj(T(k, k));
    Y.col(k) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  return Y;
}

Eigen::MatrixXd solve_lyapunov_kron(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                    const Eigen::Ref<const Eigen::MatrixXd>& W) {
  const Eigen::Index n = A.rows();
  // vec(A X + X A^T) = (I kron A + A kron I) vec(X), column-major stacking.
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    op.block(j * n, j * n, n, n) += A;
    for (Eigen::Index i = 0; i < n; ++i) {
      op.block(j * n, i * n, n, n).diagonal().array() += A(j, i);
    }
  }
  const Eigen::MatrixXd W_dense = W;
  Eigen::Map<const Eigen::VectorXd> w(W_dense.data(), n * n);
  Eigen::VectorXd x = op.partialPivLu().solve(-w);
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
}

Eigen::MatrixXd solve_lyapunov_schur(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                     const Eigen::Ref<const Eigen::MatrixXd>& W) {
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(A);
  if (schur.info() != Eigen::Success) {
    throw NoConvergence("Schur decomposition failed in solve_lyapunov", 0.0);
  }
  const Eigen::MatrixXcd& T = schur.matrixT();
  const Eigen::MatrixXcd& U = schur.matrixU();
  // A = U T U^H, A^T = A^H for real A, so with Y = U^H X U the equation
  // becomes T Y + Y T^H + U^H W U = 0.
  Eigen::MatrixXcd F = U.adjoint() * W * U;
  Eigen::MatrixXcd Y = solve_triangular_lyapunov(T, F);
  return (U * Y * U.adjoint()).real();
}

}  // namespace

void LtiSystem::validate() const {
  require_square(A, "A");
  if (B.rows() != A.rows()) {
    throw DimensionMismatch("B row count must equal state dimension");
  }
  if (C.cols() != A.rows()) {
    throw DimensionMismatch("C column count must equal state dimension");
  }
}

double spectral_abscissa(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  require_square(A, "A");
  return A.eigenvalues().real().maxCoeff();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::Ref<const Eigen::MatrixXd>& A,
                               const Eigen::Ref<const Eigen::MatrixXd>& W) {
  require_square(A, "A");
  require_square(W, "W");
  if (A.rows() != W.rows()) {
    throw DimensionMismatch("A and W must have the same dimension");
  }
  if (spectral_abscissa(A) >= kHurwitzMargin) {
    throw NotStable("solve_lyapunov: A is not Hurwitz");
  }
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd X =
      n < 32 ? solve_lyapunov_kron(A, W) : solve_lyapunov_schur(A, W);
  return 0.5 * (X + X.transpose()).eval();
}

namespace {

// Stabilizing CARE solution estimate from the stable invariant subspace of
// the Hamiltonian  H = [A, -G; -Q, -A^T]. Used to seed the Newton-Kleinman
// refinement: a zero initial gain overshoots badly when A has nearly marginal
// modes driven hard by the right-hand side. A plain eigendecomposition keeps
// near-axis eigenvalue pairs resolvable where iterative sign-function schemes
// lose them.
Eigen::MatrixXd care_hamiltonian_estimate(const Eigen::MatrixXd& A,
                                          const Eigen::MatrixXd& G,
                                          const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd H(2 * n, 2 * n);
  H << A, -G, -Q, -A.transpose();
  Eigen::EigenSolver<Eigen::MatrixXd> eig(H);
  if (eig.info() != Eigen::Success) {
    throw NoConvergence("solve_care: Hamiltonian eigendecomposition failed",
                        0.0);
  }
  Eigen::MatrixXcd basis(2 * n, n);
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < 2 * n && count < n; ++i) {
    if (eig.eigenvalues()(i).real() < 0.0) {
      basis.col(count++) = eig.eigenvectors().col(i);
    }
  }
  if (count != n) {
    throw NotStabilizable(
        "solve_care: Hamiltonian has no n-dimensional stable subspace");
  }
  const Eigen::MatrixXcd X =
      basis.bottomRows(n) * basis.topRows(n).partialPivLu().inverse();
  Eigen::MatrixXd X_real = X.real();
  return 0.5 * (X_real + X_real.transpose());
}

}  // namespace

Eigen::MatrixXd solve_care(const Eigen::Ref<const Eigen::MatrixXd>& A,
                           const Eigen::Ref<const Eigen::MatrixXd>& B,
                           const Eigen::Ref<const Eigen::MatrixXd>& C,
                           const Eigen::Ref<const Eigen::MatrixXd>& R_w,
                           CareVariant variant) {
  require_square(A, "A");
  if (B.rows() != A.rows()) {
    throw DimensionMismatch("B row count must equal state dimension");
  }
  if (C.cols() != A.rows()) {
    throw DimensionMismatch("C column count must equal state dimension");
  }
  require_square(R_w, "R");

  // The filter equation is the control equation on the dual system
  // (A^T, C^T, B^T) with unit weight, so both variants share one kernel.
  if (variant == CareVariant::kFilter) {
    return solve_care(A.transpose(), C.transpose(), B.transpose(),
                      Eigen::MatrixXd::Identity(C.rows(), C.rows()),
                      CareVariant::kControl);
  }
  if (R_w.rows() != B.cols()) {
    throw DimensionMismatch("R dimension must equal input count");
  }

  Eigen::LLT<Eigen::MatrixXd> r_llt(R_w);
  if (r_llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("solve_care: R must be positive definite");
  }

  const Eigen::Index n = A.rows();
  const Eigen::MatrixXd CtC = C.transpose() * C;
  const double rhs_scale = std::max(1.0, CtC.norm());

  // With a zero right-hand side and Hurwitz A the stabilizing solution is
  // exactly zero; short-circuit so downstream rank decisions see no noise.
  if (CtC.norm() == 0.0 && spectral_abscissa(A) < kHurwitzMargin) {
    return Eigen::MatrixXd::Zero(n, n);
  }

  // Initial stabilizing gain from the sign-function estimate. A zero gain is
  // also stabilizing whenever A is Hurwitz, but its first Newton iterate is a
  // pure Lyapunov solve that overshoots by orders of magnitude when nearly
  // marginal modes are driven hard; the sign-function start avoids that.
  Eigen::MatrixXd K(B.cols(), n);
  {
    const Eigen::MatrixXd Q_est = care_hamiltonian_estimate(
        A, B * r_llt.solve(B.transpose()), CtC);
    K = r_llt.solve(B.transpose() * Q_est);
    if (!K.allFinite() || spectral_abscissa(A - B * K) >= kHurwitzMargin) {
      if (spectral_abscissa(A) < kHurwitzMargin) {
        K.setZero();
      } else {
        throw NotStabilizable("solve_care: no stabilizing initial gain found");
      }
    }
  }

  // Newton-Kleinman: with gain K_i = R^-1 B^T Q_i, each iterate solves
  //   (A - B K_i)^T Q_{i+1} + Q_{i+1} (A - B K_i) + C^T C + K_i^T R K_i = 0.
  // Starting from a stabilizing gain the closed loop stays Hurwitz and the
  // iterates decrease monotonically to the stabilizing solution.
  const int max_newton = 100;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (int it = 0; it < max_newton; ++it) {
    Eigen::MatrixXd A_cl = A - B * K;
    if (it > 0 && spectral_abscissa(A_cl) >= kHurwitzMargin) {
      throw NotDetectable(
          "solve_care: Newton iterate lost the stabilizing property");
    }
    Eigen::MatrixXd W = CtC + K.transpose() * R_w * K;
    Eigen::MatrixXd Q_next =
        solve_lyapunov(A_cl.transpose(), 0.5 * (W + W.transpose()));
    const double change = (Q_next - Q).norm();
    Q = Q_next;
    K = r_llt.solve(B.transpose() * Q);
    if (it > 0 && change <= 1e-12 * std::max(1.0, Q.norm())) {
      Q = 0.5 * (Q + Q.transpose()).eval();
      Eigen::MatrixXd residual = A.transpose() * Q + Q * A -
                                 Q * B * r_llt.solve(B.transpose() * Q) + CtC;
      if (residual.norm() > 1e-8 * rhs_scale) {
        throw NoConvergence("solve_care: residual above tolerance",
                            residual.norm());
      }
      if (spectral_abscissa(A - B * r_llt.solve(B.transpose() * Q)) >=
          kHurwitzMargin) {
        throw NotDetectable("solve_care: closed loop is not Hurwitz");
      }
      return Q;
    }
  }
  throw NoConvergence("solve_care: Newton-Kleinman iteration cap reached",
                      (A.transpose() * Q + Q * A -
                       Q * B * r_llt.solve(B.transpose() * Q) + CtC)
                          .norm());
}

SymPsdFactor psd_factor(const Eigen::Ref<const Eigen::MatrixXd>& X,
                        double rank_tol) {
  require_square(X, "X");
  const double asym = (X - X.transpose()).norm();
  if (asym > 1e-10 * std::max(1.0, X.norm())) {
    throw NotPsd("psd_factor: input is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (X + X.transpose()));
  if (eig.info() != Eigen::Success) {
    throw NoConvergence("psd_factor: eigendecomposition failed", 0.0);
  }
  const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
  const double lambda_max = std::max(lambda.maxCoeff(), 0.0);
  const double cut = rank_tol * lambda_max;
  if (lambda.minCoeff() < -cut) {
    throw NotPsd("psd_factor: negative eigenvalue beyond tolerance");
  }

  const Eigen::Index n = X.rows();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lambda(i) > cut) ++rank;
  }
  SymPsdFactor out;
  out.rank = rank;
  out.factor.resize(n, rank);
  // Descending order so leading columns carry the dominant contributions.
  for (Eigen::Index j = 0; j < rank; ++j) {
    const Eigen::Index src = n - 1 - j;
    out.factor.col(j) = eig.eigenvectors().col(src) * std::sqrt(lambda(src));
  }
  return out;
}

}  // namespace mateq
}  // namespace romctl
