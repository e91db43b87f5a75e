#include "romctl/dynamics.hpp"

#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace romctl {
namespace dyn {

namespace {

void check_quad_dims(const Eigen::SparseMatrix<double>& G, Eigen::Index n) {
  if (G.rows() != n || G.cols() != n * n) {
    std::ostringstream os;
    os << "G must be n x n^2 with n = " << n << ", got " << G.rows() << "x"
       << G.cols();
    throw DimensionMismatch(os.str());
  }
}

}  // namespace

Eigen::VectorXd quad_apply(const Eigen::SparseMatrix<double>& G,
                           const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = x.size();
  check_quad_dims(G, n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < G.outerSize(); ++c) {
    const Eigen::Index j = c / n;  // column c of G multiplies x_j * x_k
    const Eigen::Index k = c % n;
    const double xx = x(j) * x(k);
    if (xx == 0.0) continue;
    for (Eigen::SparseMatrix<double>::InnerIterator it(G, c); it; ++it) {
      y(it.row()) += it.value() * xx;
    }
  }
  return y;
}

Eigen::MatrixXd quad_jacobian(const Eigen::SparseMatrix<double>& G,
                              const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = x.size();
  check_quad_dims(G, n);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int c = 0; c < G.outerSize(); ++c) {
    const Eigen::Index j = c / n;
    const Eigen::Index k = c % n;
    for (Eigen::SparseMatrix<double>::InnerIterator it(G, c); it; ++it) {
      J(it.row(), k) += it.value() * x(j);
      J(it.row(), j) += it.value() * x(k);
    }
  }
  return J;
}

Eigen::SparseMatrix<double> kron_symmetrize(const Eigen::SparseMatrix<double>& G) {
  const Eigen::Index n = G.rows();
  check_quad_dims(G, n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(G.nonZeros()) * 2);
  for (int c = 0; c < G.outerSize(); ++c) {
    const Eigen::Index j = c / n;
    const Eigen::Index k = c % n;
    const Eigen::Index swapped = k * n + j;
    for (Eigen::SparseMatrix<double>::InnerIterator it(G, c); it; ++it) {
      trips.emplace_back(it.row(), c, 0.5 * it.value());
      trips.emplace_back(it.row(), swapped, 0.5 * it.value());
    }
  }
  Eigen::SparseMatrix<double> out(n, n * n);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

QuadraticSystem QuadraticSystem::make(Eigen::MatrixXd A,
                                      Eigen::SparseMatrix<double> G,
                                      Eigen::MatrixXd B, Eigen::MatrixXd C,
                                      Eigen::VectorXd x0, bool symmetrize) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw DimensionMismatch("A must be square");
  check_quad_dims(G, n);
  if (B.rows() != n) throw DimensionMismatch("B row count must equal n");
  if (C.cols() != n) throw DimensionMismatch("C column count must equal n");
  if (x0.size() != n) throw DimensionMismatch("x0 size must equal n");
  QuadraticSystem sys;
  sys.A = std::move(A);
  sys.G = symmetrize ? kron_symmetrize(G) : std::move(G);
  sys.B = std::move(B);
  sys.C = std::move(C);
  sys.x0 = std::move(x0);
  return sys;
}

Eigen::VectorXd QuadraticSystem::rhs(const Eigen::Ref<const Eigen::VectorXd>& x,
                                     const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return A * x + quad_apply(G, x) + B * u;
}

Eigen::VectorXd backward_euler_step(const QuadraticSystem& sys, double dt,
                                    const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const Eigen::Ref<const Eigen::VectorXd>& u,
                                    double tol, int max_iter) {
  if (dt <= 0.0) throw ConfigInvalid("backward_euler_step: dt must be > 0");
  if (x.size() != sys.n() || u.size() != sys.m()) {
    throw DimensionMismatch("backward_euler_step: state/control size mismatch");
  }
  const Eigen::Index n = sys.n();
  const Eigen::VectorXd bu = sys.B * u;

  auto residual = [&](const Eigen::VectorXd& xp) -> Eigen::VectorXd {
    return xp - x - dt * (sys.A * xp + quad_apply(sys.G, xp) + bu);
  };

  Eigen::VectorXd xp = x;  // warm start from the previous state
  Eigen::VectorXd F = residual(xp);
  double fnorm = F.norm();
  double lambda = 1e-3;

  for (int it = 0; it < max_iter; ++it) {
    if (fnorm <= tol) return xp;
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n) -
                        dt * (sys.A + quad_jacobian(sys.G, xp));
    Eigen::MatrixXd normal = J.transpose() * J;
    normal.diagonal().array() += lambda;
    Eigen::VectorXd delta =
        normal.ldlt().solve(-J.transpose() * F);
    Eigen::VectorXd xp_trial = xp + delta;
    Eigen::VectorXd F_trial = residual(xp_trial);
    const double fnorm_trial = F_trial.norm();
    if (fnorm_trial < fnorm) {
      xp = std::move(xp_trial);
      F = std::move(F_trial);
      fnorm = fnorm_trial;
      lambda = std::max(lambda * 0.1, 1e-16);
    } else {
      lambda *= 10.0;
    }
  }
  if (fnorm <= tol) return xp;
  throw NoConvergence("backward_euler_step: Levenberg-Marquardt did not reach "
                      "the residual tolerance",
                      fnorm);
}

DiscretizedSystem::DiscretizedSystem(QuadraticSystem base, double dt,
                                     double newton_tol, int newton_max_iter)
    : base_(std::move(base)),
      dt_(dt),
      newton_tol_(newton_tol),
      newton_max_iter_(newton_max_iter) {
  if (dt_ <= 0.0) throw ConfigInvalid("DiscretizedSystem: dt must be > 0");
}

Eigen::VectorXd DiscretizedSystem::step(
    const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& u) const {
  const double tol = newton_tol_ * (1.0 + x.norm());
  return backward_euler_step(base_, dt_, x, u, tol, newton_max_iter_);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> DiscretizedSystem::jacobians(
    const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return discretized_jacobians(*this, x, u);
}

Eigen::MatrixXd DiscretizedSystem::jacobian_x(
    const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return jacobians(x, u).first;
}

Eigen::MatrixXd DiscretizedSystem::jacobian_u(
    const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return jacobians(x, u).second;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> discretized_jacobians(
    const DiscretizedSystem& sys, const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& u) {
  const Eigen::VectorXd xp = sys.step(x, u);
  const Eigen::Index n = sys.state_dim();
  const QuadraticSystem& base = sys.base();
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n) -
                      sys.dt() * (base.A + quad_jacobian(base.G, xp));
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
  Eigen::MatrixXd J_inv = lu.solve(Eigen::MatrixXd::Identity(n, n));
  const double cond1 = J.cwiseAbs().colwise().sum().maxCoeff() *
                       J_inv.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(cond1) || cond1 > 1e12) {
    throw SingularJacobian("discretized_jacobians: implicit step Jacobian is "
                           "numerically singular");
  }
  return {J_inv, J_inv * (sys.dt() * base.B)};
}

Eigen::MatrixXd simulate(const ControlledSystem& sys,
                         const Eigen::Ref<const Eigen::VectorXd>& x0,
                         const Eigen::Ref<const Eigen::MatrixXd>& controls) {
  const Eigen::Index N = controls.rows();
  if (N < 1) throw DimensionMismatch("simulate: need at least one control");
  if (x0.size() != sys.state_dim() || controls.cols() != sys.control_dim()) {
    throw DimensionMismatch("simulate: dimension mismatch");
  }
  Eigen::MatrixXd traj(N + 1, sys.state_dim());
  traj.row(0) = x0.transpose();
  Eigen::VectorXd x = x0;
  for (Eigen::Index k = 0; k < N; ++k) {
    try {
      x = sys.step(x, controls.row(k).transpose());
    } catch (const NoConvergence& e) {
      std::ostringstream os;
      os << "simulate: step " << k << " failed: " << e.what();
      throw NoConvergence(os.str(), e.residual());
    }
    traj.row(k + 1) = x.transpose();
  }
  return traj;
}

LinearDiscreteSystem::LinearDiscreteSystem(Eigen::MatrixXd A, Eigen::MatrixXd B)
    : A_(std::move(A)), B_(std::move(B)) {
  if (A_.rows() != A_.cols()) throw DimensionMismatch("A must be square");
  if (B_.rows() != A_.rows()) throw DimensionMismatch("B row count mismatch");
}

Eigen::VectorXd LinearDiscreteSystem::step(
    const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return A_ * x + B_ * u;
}

QuadraticMapSystem::QuadraticMapSystem(Eigen::MatrixXd A,
                                       Eigen::SparseMatrix<double> G,
                                       Eigen::MatrixXd B)
    : A_(std::move(A)), G_(std::move(G)), B_(std::move(B)) {
  if (A_.rows() != A_.cols()) throw DimensionMismatch("A must be square");
  check_quad_dims(G_, A_.rows());
  if (B_.rows() != A_.rows()) throw DimensionMismatch("B row count mismatch");
}

Eigen::VectorXd QuadraticMapSystem::step(
    const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return A_ * x + quad_apply(G_, x) + B_ * u;
}

Eigen::MatrixXd QuadraticMapSystem::jacobian_x(
    const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>&) const {
  return A_ + quad_jacobian(G_, x);
}

}  // namespace dyn
}  // namespace romctl
