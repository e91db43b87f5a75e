#include "romctl/modred.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace romctl {
namespace modred {

namespace {

// Deterministic SVD signs: the largest-magnitude entry of each left singular
// vector is made positive, with V flipped to match.
void fix_svd_signs(Eigen::MatrixXd& U, Eigen::MatrixXd& V) {
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    Eigen::Index imax = 0;
    U.col(j).cwiseAbs().maxCoeff(&imax);
    if (U(imax, j) < 0.0) {
      U.col(j) = -U.col(j);
      V.col(j) = -V.col(j);
    }
  }
}

ReductionBasis balance_from_factors(const Eigen::MatrixXd& R_factor,
                                    const Eigen::MatrixXd& L_factor,
                                    Eigen::Index r, ReductionMethod method,
                                    TruncationMode mode) {
  ReductionBasis basis;
  basis.method = method;
  if (r < 1) throw ConfigInvalid("reduction dimension must be >= 1");

  Eigen::Index r_eff = std::min({r, L_factor.cols(), R_factor.cols()});
  basis.rank_clamped = r_eff < r;
  if (r_eff == 0) {
    basis.singular_values.resize(0);
    basis.r = 0;
    basis.T_r.resize(R_factor.rows(), 0);
    basis.T_l.resize(0, R_factor.rows());
    return basis;
  }

  // Reference ladder from the full factors (the pretruncated SVD below only
  // sees the leading columns).
  Eigen::JacobiSVD<Eigen::MatrixXd> full_svd(
      L_factor.transpose() * R_factor,
      Eigen::ComputeThinU | Eigen::ComputeThinV);
  basis.singular_values = full_svd.singularValues();

  Eigen::MatrixXd U, V;
  Eigen::VectorXd sigma;
  if (mode == TruncationMode::kPretruncate) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        L_factor.leftCols(r_eff).transpose() * R_factor.leftCols(r_eff),
        Eigen::ComputeThinU | Eigen::ComputeThinV);
    U = svd.matrixU();
    V = svd.matrixV();
    sigma = svd.singularValues();
  } else {
    U = full_svd.matrixU();
    V = full_svd.matrixV();
    sigma = full_svd.singularValues();
  }
  fix_svd_signs(U, V);

  // Guard against zero singular values inside the kept block.
  Eigen::Index usable = 0;
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(r_eff, sigma.size()); ++i) {
    if (sigma(i) > sigma(0) * 1e-14 && sigma(i) > 0.0) ++usable;
  }
  if (usable < r_eff) {
    basis.rank_clamped = true;
    r_eff = usable;
  }
  if (r_eff == 0) {
    basis.r = 0;
    basis.T_r.resize(R_factor.rows(), 0);
    basis.T_l.resize(0, R_factor.rows());
    return basis;
  }

  const Eigen::ArrayXd inv_sqrt =
      sigma.head(r_eff).array().sqrt().inverse();
  const Eigen::MatrixXd R_cols = mode == TruncationMode::kPretruncate
                                     ? R_factor.leftCols(r_eff)
                                     : R_factor;
  const Eigen::MatrixXd L_cols = mode == TruncationMode::kPretruncate
                                     ? L_factor.leftCols(r_eff)
                                     : L_factor;
  basis.T_r = R_cols * V.leftCols(r_eff) * inv_sqrt.matrix().asDiagonal();
  basis.T_l = inv_sqrt.matrix().asDiagonal() *
              U.leftCols(r_eff).transpose() * L_cols.transpose();
  basis.r = r_eff;
  return basis;
}

}  // namespace

namespace {

// Factor keeping every strictly positive eigen-direction, for the reference
// ladder: the rank-tolerance factor would cut the ladder off right where the
// interesting level-off behaviour lives.
Eigen::MatrixXd full_psd_factor(const Eigen::MatrixXd& X) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (X + X.transpose()));
  const Eigen::Index n = X.rows();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (eig.eigenvalues()(i) > 0.0) ++rank;
  }
  Eigen::MatrixXd F(n, rank);
  Eigen::Index j = 0;
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    if (eig.eigenvalues()(i) > 0.0) {
      F.col(j++) = eig.eigenvectors().col(i) * std::sqrt(eig.eigenvalues()(i));
    }
  }
  return F;
}

ReductionBasis balance_from_gramians(const Eigen::MatrixXd& P,
                                     const Eigen::MatrixXd& Q, Eigen::Index r,
                                     ReductionMethod method,
                                     TruncationMode mode) {
  ReductionBasis basis =
      balance_from_factors(mateq::psd_factor(P).factor,
                           mateq::psd_factor(Q).factor, r, method, mode);
  // Reference ladder over all positive directions of both solutions.
  const Eigen::MatrixXd L_full = full_psd_factor(Q);
  const Eigen::MatrixXd R_full = full_psd_factor(P);
  if (L_full.cols() > 0 && R_full.cols() > 0) {
    basis.singular_values =
        Eigen::JacobiSVD<Eigen::MatrixXd>(L_full.transpose() * R_full)
            .singularValues();
  }
  return basis;
}

}  // namespace

ReductionBasis balanced_truncation(const mateq::LtiSystem& sys, Eigen::Index r,
                                   TruncationMode mode) {
  sys.validate();
  const Eigen::MatrixXd P =
      mateq::solve_lyapunov(sys.A, sys.B * sys.B.transpose());
  const Eigen::MatrixXd Q =
      mateq::solve_lyapunov(sys.A.transpose(), sys.C.transpose() * sys.C);
  return balance_from_gramians(P, Q, r, ReductionMethod::kBt, mode);
}

ReductionBasis lqg_balanced_truncation(const mateq::LtiSystem& sys,
                                       const Eigen::Ref<const Eigen::MatrixXd>& R_ctrl,
                                       Eigen::Index r, TruncationMode mode) {
  sys.validate();
  const Eigen::MatrixXd P =
      mateq::solve_care(sys.A, sys.B, sys.C, R_ctrl, mateq::CareVariant::kFilter);
  const Eigen::MatrixXd Q =
      mateq::solve_care(sys.A, sys.B, sys.C, R_ctrl, mateq::CareVariant::kControl);
  return balance_from_gramians(P, Q, r, ReductionMethod::kLqgBt, mode);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> tustin_d2c(
    const Eigen::Ref<const Eigen::MatrixXd>& A_d,
    const Eigen::Ref<const Eigen::MatrixXd>& B_d, double dt) {
  if (A_d.rows() != A_d.cols()) throw DimensionMismatch("A_d must be square");
  if (B_d.rows() != A_d.rows()) throw DimensionMismatch("B_d row count mismatch");
  if (dt <= 0.0) throw ConfigInvalid("tustin_d2c: dt must be > 0");
  const Eigen::Index n = A_d.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A_d + I);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw SingularMatrix("tustin_d2c: A_d + I is singular (eigenvalue at -1)");
  }
  Eigen::MatrixXd A_c = (2.0 / dt) * lu.solve(A_d - I);
  Eigen::MatrixXd B_c = (2.0 / std::sqrt(dt)) * lu.solve(B_d);
  return {std::move(A_c), std::move(B_c)};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> tustin_c2d(
    const Eigen::Ref<const Eigen::MatrixXd>& A_c,
    const Eigen::Ref<const Eigen::MatrixXd>& B_c, double dt) {
  const Eigen::Index n = A_c.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(I - 0.5 * dt * A_c);
  Eigen::MatrixXd A_d = lu.solve(I + 0.5 * dt * A_c);
  Eigen::MatrixXd B_d = std::sqrt(dt) * lu.solve(B_c);
  return {std::move(A_d), std::move(B_d)};
}

dyn::QuadraticSystem project_quadratic(const dyn::QuadraticSystem& sys,
                                       const ReductionBasis& basis) {
  const Eigen::Index n = sys.n();
  const Eigen::Index r = basis.r;
  if (basis.T_r.rows() != n || basis.T_l.cols() != n) {
    throw DimensionMismatch("project_quadratic: basis does not match system");
  }

  // G_r = T_l G (T_r kron T_r), contracted one factor at a time:
  // H[:, j*r + b] = sum_k G[:, j*n + k] T_r(k, b), then contract over j.
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n * r);
  for (int c = 0; c < sys.G.outerSize(); ++c) {
    const Eigen::Index j = c / n;
    const Eigen::Index k = c % n;
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.G, c); it; ++it) {
      for (Eigen::Index b = 0; b < r; ++b) {
        H(it.row(), j * r + b) += it.value() * basis.T_r(k, b);
      }
    }
  }
  Eigen::MatrixXd G_full = Eigen::MatrixXd::Zero(n, r * r);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index a = 0; a < r; ++a) {
      const double w = basis.T_r(j, a);
      if (w == 0.0) continue;
      G_full.middleCols(a * r, r) += w * H.middleCols(j * r, r);
    }
  }
  Eigen::MatrixXd G_r_dense = basis.T_l * G_full;
  Eigen::SparseMatrix<double> G_r = G_r_dense.sparseView(1.0, 0.0);

  return dyn::QuadraticSystem::make(
      basis.T_l * sys.A * basis.T_r, std::move(G_r), basis.T_l * sys.B,
      sys.C * basis.T_r, basis.T_l * sys.x0);
}

ilqr::QuadraticCost project_cost(const ilqr::QuadraticCost& cost,
                                 const ReductionBasis& basis) {
  return ilqr::QuadraticCost::make(
      basis.T_r.transpose() * cost.Q * basis.T_r,
      basis.T_r.transpose() * cost.Qf * basis.T_r, cost.R,
      basis.T_l * cost.x_star);
}

SingularValueReport singular_value_report(const mateq::LtiSystem& sys,
                                          const Eigen::Ref<const Eigen::MatrixXd>& R_ctrl) {
  SingularValueReport rep;
  const ReductionBasis bt = balanced_truncation(sys, 1);
  const ReductionBasis lqg = lqg_balanced_truncation(sys, R_ctrl, 1);
  if (bt.singular_values.size() == 0 || lqg.singular_values.size() == 0) {
    throw Error("singular_value_report: degenerate system (empty ladder)");
  }
  rep.bt = bt.singular_values / bt.singular_values(0);
  rep.lqgbt = lqg.singular_values / lqg.singular_values(0);
  return rep;
}

}  // namespace modred
}  // namespace romctl
