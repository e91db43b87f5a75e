#pragma once

#include <utility>

#include <Eigen/Core>

#include "romctl/dynamics.hpp"
#include "romctl/errors.hpp"
#include "romctl/ilqr.hpp"
#include "romctl/mateq.hpp"

namespace romctl {
namespace modred {

enum class ReductionMethod { kBt, kLqgBt };

// Petrov-Galerkin projection pair with bi-orthogonality T_l T_r = I_r,
// plus the full singular-value ladder of L^T R before truncation.
struct ReductionBasis {
  Eigen::MatrixXd T_r;              // n x r trial basis
  Eigen::MatrixXd T_l;              // r x n test basis
  Eigen::VectorXd singular_values;  // full ladder, non-increasing
  ReductionMethod method = ReductionMethod::kBt;
  Eigen::Index r = 0;
  bool rank_clamped = false;  // requested r exceeded the effective rank
};

// Which columns enter the balancing SVD.
//  kFullSvd (default): one SVD of the full L^T R, then the leading r
//    triplets; bases for r' < r are exactly nested in the r-basis, the
//    truncated realization keeps diagonal Gramians, and the construction is
//    insensitive to the ordering of the factor columns.
//  kPretruncate: svd(L[:,1:r]^T R[:,1:r]) - the factors are cut to the
//    requested r before the SVD. Cheaper for small r, but only sound when the
//    leading factor columns already dominate; with eigenvalue-degenerate
//    Gramians the truncated product can lose well-balanced directions.
enum class TruncationMode { kFullSvd, kPretruncate };

// Balanced truncation of a stable LTI system. The Gramians come from the two
// Lyapunov equations, are factored as P = R R^T, Q = L L^T, and the requested
// dimension is clamped to min(r, rank L, rank R).
ReductionBasis balanced_truncation(const mateq::LtiSystem& sys, Eigen::Index r,
                                   TruncationMode mode = TruncationMode::kFullSvd);

// Same construction with the Gramians replaced by the stabilizing solutions
// of the filter/control algebraic Riccati equations; R_ctrl weighs the
// control equation.
ReductionBasis lqg_balanced_truncation(const mateq::LtiSystem& sys,
                                       const Eigen::Ref<const Eigen::MatrixXd>& R_ctrl,
                                       Eigen::Index r,
                                       TruncationMode mode = TruncationMode::kFullSvd);

// Inverse bilinear (Tustin) map from a discrete-time pair at step dt to the
// continuous-time pair:
//   A_c = (2/dt) (A_d - I)(A_d + I)^-1,  B_c = (2/sqrt(dt)) (A_d + I)^-1 B_d.
// Applying the forward Tustin map to the result recovers the input.
// Throws SingularMatrix when A_d has an eigenvalue at -1.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> tustin_d2c(
    const Eigen::Ref<const Eigen::MatrixXd>& A_d,
    const Eigen::Ref<const Eigen::MatrixXd>& B_d, double dt);

// Forward Tustin map, the inverse of tustin_d2c (used for round trips).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> tustin_c2d(
    const Eigen::Ref<const Eigen::MatrixXd>& A_c,
    const Eigen::Ref<const Eigen::MatrixXd>& B_c, double dt);

// Projects a quadratic system: A_r = T_l A T_r, B_r = T_l B, C_r = C T_r,
// G_r = T_l G (T_r kron T_r) contracted without forming T_r kron T_r,
// x_r(0) = T_l x0.
dyn::QuadraticSystem project_quadratic(const dyn::QuadraticSystem& sys,
                                       const ReductionBasis& basis);

// Projects the cost: Q_r = T_r^T Q T_r, Qf_r = T_r^T Qf T_r, R unchanged,
// x*_r = T_l x*. For Q = C^T C this reproduces C_r^T C_r.
ilqr::QuadraticCost project_cost(const ilqr::QuadraticCost& cost,
                                 const ReductionBasis& basis);

struct SingularValueReport {
  Eigen::VectorXd bt;     // normalized by its first entry
  Eigen::VectorXd lqgbt;  // normalized by its first entry
};

// Full normalized ladders for both methods on the same system.
SingularValueReport singular_value_report(const mateq::LtiSystem& sys,
                                          const Eigen::Ref<const Eigen::MatrixXd>& R_ctrl);

}  // namespace modred
}  // namespace romctl
