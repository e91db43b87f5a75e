#pragma once

#include <utility>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "romctl/errors.hpp"

namespace romctl {
namespace dyn {

// Discrete-time controlled dynamics x_{k+1} = f(x_k, u_k) with Jacobian
// access. Implementations are immutable after construction and safe to share
// across threads.
class ControlledSystem {
 public:
  virtual ~ControlledSystem() = default;

  virtual Eigen::Index state_dim() const = 0;
  virtual Eigen::Index control_dim() const = 0;

  virtual Eigen::VectorXd step(const Eigen::Ref<const Eigen::VectorXd>& x,
                               const Eigen::Ref<const Eigen::VectorXd>& u) const = 0;
  virtual Eigen::MatrixXd jacobian_x(const Eigen::Ref<const Eigen::VectorXd>& x,
                                     const Eigen::Ref<const Eigen::VectorXd>& u) const = 0;
  virtual Eigen::MatrixXd jacobian_u(const Eigen::Ref<const Eigen::VectorXd>& x,
                                     const Eigen::Ref<const Eigen::VectorXd>& u) const = 0;

  // Both Jacobians at once; overridden where they share work.
  virtual std::pair<Eigen::MatrixXd, Eigen::MatrixXd> jacobians(
      const Eigen::Ref<const Eigen::VectorXd>& x,
      const Eigen::Ref<const Eigen::VectorXd>& u) const {
    return {jacobian_x(x, u), jacobian_u(x, u)};
  }
};

// Evaluates G (x kron x) without materializing the n^2 vector.
Eigen::VectorXd quad_apply(const Eigen::SparseMatrix<double>& G,
                           const Eigen::Ref<const Eigen::VectorXd>& x);

// Jacobian of quad_apply: G (x kron I + I kron x).
Eigen::MatrixXd quad_jacobian(const Eigen::SparseMatrix<double>& G,
                              const Eigen::Ref<const Eigen::VectorXd>& x);

// Averages G with its Kronecker transpose so that G (x kron y) = G (y kron x).
Eigen::SparseMatrix<double> kron_symmetrize(const Eigen::SparseMatrix<double>& G);

// Continuous-time system  xdot = A x + G (x kron x) + B u,  y = C x.
struct QuadraticSystem {
  Eigen::MatrixXd A;
  Eigen::SparseMatrix<double> G;  // n x n^2
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::VectorXd x0;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }

  // Validates dimensions; optionally enforces Kronecker symmetry of G.
  static QuadraticSystem make(Eigen::MatrixXd A, Eigen::SparseMatrix<double> G,
                              Eigen::MatrixXd B, Eigen::MatrixXd C,
                              Eigen::VectorXd x0, bool symmetrize = false);

  Eigen::VectorXd rhs(const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& u) const;
};

// One implicit backward-Euler step: solves
//   xp - x - dt (A xp + G (xp kron xp) + B u) = 0
// by Levenberg-Marquardt with the analytic Jacobian I - dt (A + G_x(xp)).
// Throws NoConvergence (with the final residual) after max_iter trial steps.
Eigen::VectorXd backward_euler_step(const QuadraticSystem& sys, double dt,
                                    const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const Eigen::Ref<const Eigen::VectorXd>& u,
                                    double tol, int max_iter);

// ControlledSystem adapter: one backward-Euler step of a QuadraticSystem per
// discrete step. The Newton tolerance scales as newton_tol * (1 + |x|).
class DiscretizedSystem : public ControlledSystem {
 public:
  DiscretizedSystem(QuadraticSystem base, double dt, double newton_tol = 1e-10,
                    int newton_max_iter = 50);

  Eigen::Index state_dim() const override { return base_.n(); }
  Eigen::Index control_dim() const override { return base_.m(); }

  Eigen::VectorXd step(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& u) const override;
  Eigen::MatrixXd jacobian_x(const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& u) const override;
  Eigen::MatrixXd jacobian_u(const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& u) const override;
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> jacobians(
      const Eigen::Ref<const Eigen::VectorXd>& x,
      const Eigen::Ref<const Eigen::VectorXd>& u) const override;

  const QuadraticSystem& base() const { return base_; }
  double dt() const { return dt_; }

 private:
  QuadraticSystem base_;
  double dt_;
  double newton_tol_;
  int newton_max_iter_;
};

// Exact derivatives of the implicit backward-Euler step at (x, u), via the
// implicit function theorem: with J = I - dt (A + G_x(xp)),
//   A_k = J^-1 and B_k = J^-1 dt B.
// Throws SingularJacobian when the 1-norm condition estimate exceeds 1e12.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> discretized_jacobians(
    const DiscretizedSystem& sys, const Eigen::Ref<const Eigen::VectorXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& u);

// Rolls the system forward under the control sequence (rows of `controls`).
// Returns the (N+1) x n trajectory with row 0 = x0. Step failures are
// rethrown with the offending index attached.
Eigen::MatrixXd simulate(const ControlledSystem& sys,
                         const Eigen::Ref<const Eigen::VectorXd>& x0,
                         const Eigen::Ref<const Eigen::MatrixXd>& controls);

// x_{k+1} = A x_k + B u_k.
class LinearDiscreteSystem : public ControlledSystem {
 public:
  LinearDiscreteSystem(Eigen::MatrixXd A, Eigen::MatrixXd B);

  Eigen::Index state_dim() const override { return A_.rows(); }
  Eigen::Index control_dim() const override { return B_.cols(); }

  Eigen::VectorXd step(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& u) const override;
  Eigen::MatrixXd jacobian_x(const Eigen::Ref<const Eigen::VectorXd>&,
                             const Eigen::Ref<const Eigen::VectorXd>&) const override {
    return A_;
  }
  Eigen::MatrixXd jacobian_u(const Eigen::Ref<const Eigen::VectorXd>&,
                             const Eigen::Ref<const Eigen::VectorXd>&) const override {
    return B_;
  }

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }

 private:
  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
};

// Explicit discrete quadratic map  x_{k+1} = A x_k + G (x_k kron x_k) + B u_k.
class QuadraticMapSystem : public ControlledSystem {
 public:
  QuadraticMapSystem(Eigen::MatrixXd A, Eigen::SparseMatrix<double> G,
                     Eigen::MatrixXd B);

  Eigen::Index state_dim() const override { return A_.rows(); }
  Eigen::Index control_dim() const override { return B_.cols(); }

  Eigen::VectorXd step(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& u) const override;
  Eigen::MatrixXd jacobian_x(const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>&) const override;
  Eigen::MatrixXd jacobian_u(const Eigen::Ref<const Eigen::VectorXd>&,
                             const Eigen::Ref<const Eigen::VectorXd>&) const override {
    return B_;
  }

 private:
  Eigen::MatrixXd A_;
  Eigen::SparseMatrix<double> G_;
  Eigen::MatrixXd B_;
};

}  // namespace dyn
}  // namespace romctl
