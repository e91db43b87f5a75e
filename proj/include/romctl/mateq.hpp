#pragma once

#include <Eigen/Core>

#include "romctl/errors.hpp"

namespace romctl {
namespace mateq {

// Column-compressed square root of a symmetric PSD matrix: X = factor * factor^T.
// Columns are ordered by decreasing contribution and are linearly independent,
// so rank equals the column count.
struct SymPsdFactor {
  Eigen::MatrixXd factor;  // n x rank
  Eigen::Index rank = 0;
};

// Continuous-time LTI triple  xdot = A x + B u,  y = C x.
struct LtiSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }

  void validate() const;
};

// Largest real part of the spectrum of A.
double spectral_abscissa(const Eigen::Ref<const Eigen::MatrixXd>& A);

// Solves A X + X A^T + W = 0 for symmetric PSD W and Hurwitz A.
// Kronecker vectorization for n < 32, complex-Schur Bartels-Stewart otherwise.
// The returned X is explicitly symmetrized.
// Throws NotStable if A has an eigenvalue with real part >= -1e-12.
Eigen::MatrixXd solve_lyapunov(const Eigen::Ref<const Eigen::MatrixXd>& A,
                               const Eigen::Ref<const Eigen::MatrixXd>& W);

enum class CareVariant {
  kFilter,   // A P + P A^T - P C^T C P + B B^T = 0
  kControl,  // A^T Q + Q A - Q B R^-1 B^T Q + C^T C = 0
};

// Stabilizing PSD solution of the LQG algebraic Riccati equation, computed by
// Newton-Kleinman iteration (each step one Lyapunov solve). The initial gain is
// zero, which is stabilizing exactly when A is Hurwitz; otherwise
// NotStabilizable is thrown. R_w enters the control variant only.
Eigen::MatrixXd solve_care(const Eigen::Ref<const Eigen::MatrixXd>& A,
                           const Eigen::Ref<const Eigen::MatrixXd>& B,
                           const Eigen::Ref<const Eigen::MatrixXd>& C,
                           const Eigen::Ref<const Eigen::MatrixXd>& R_w,
                           CareVariant variant);

// Low-rank square-root extraction from a symmetric PSD matrix via the
// eigendecomposition. Eigenvalues <= rank_tol * lambda_max are truncated;
// an eigenvalue below -rank_tol * lambda_max raises NotPsd.
SymPsdFactor psd_factor(const Eigen::Ref<const Eigen::MatrixXd>& X,
                        double rank_tol = 1e-12);

}  // namespace mateq
}  // namespace romctl
