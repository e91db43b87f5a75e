#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "romctl/dynamics.hpp"
#include "romctl/errors.hpp"

namespace romctl {
namespace ilqr {

// Quadratic tracking cost
//   J = (x_N - x*)^T Qf (x_N - x*) + sum_{k=0}^{N-1} x_k^T Q x_k + u_k^T R u_k.
struct QuadraticCost {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd Qf;
  Eigen::MatrixXd R;
  Eigen::VectorXd x_star;

  Eigen::Index n() const { return Q.rows(); }
  Eigen::Index m() const { return R.rows(); }

  // Validates symmetry (1e-12 relative), R positive definite (Cholesky) and
  // Q, Qf positive semidefinite (eigenvalues >= -1e-10 * norm).
  static QuadraticCost make(Eigen::MatrixXd Q, Eigen::MatrixXd Qf,
                            Eigen::MatrixXd R, Eigen::VectorXd x_star);
};

struct IlqrConfig {
  double tol = 1e-6;      // relative cost-decrease threshold
  int max_iter = 20000;
  bool record_history = true;
};

struct IlqrResult {
  Eigen::MatrixXd controls;        // N x m
  Eigen::MatrixXd trajectory;      // (N+1) x n
  std::vector<double> cost_history;  // initial rollout cost, then one entry per pass
  int iterations = 0;              // cost-improving passes (the terminal pass that
                                   // merely confirms convergence is not counted)
};

// Thrown when the iteration cap is hit or the cost diverges; carries the best
// iterate found so far.
class MaxIterationsReached : public Error {
 public:
  MaxIterationsReached(const std::string& what, IlqrResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const IlqrResult& partial() const { return partial_; }

 private:
  IlqrResult partial_;
};

struct Linearization {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x m
};

// Gains and value-function terms from one backward sweep, indexed by time
// step. S has N+1 entries (S[N] = Qf), v has N+1 entries
// (v[N] = Qf (x_N - x*)); K, Kv, Ku have N entries.
struct BackwardPassGains {
  std::vector<Eigen::MatrixXd> K;   // m x n
  std::vector<Eigen::MatrixXd> Kv;  // m x n
  std::vector<Eigen::MatrixXd> Ku;  // m x m
  std::vector<Eigen::MatrixXd> S;   // n x n
  std::vector<Eigen::VectorXd> v;   // n
};

double evaluate_cost(const QuadraticCost& cost,
                     const Eigen::Ref<const Eigen::MatrixXd>& trajectory,
                     const Eigen::Ref<const Eigen::MatrixXd>& controls);

// Backward sweep along a nominal trajectory/control pair:
//   K_k  = (B_k^T S_{k+1} B_k + R)^-1 B_k^T S_{k+1} A_k
//   Kv_k = (B_k^T S_{k+1} B_k + R)^-1 B_k^T
//   Ku_k = (B_k^T S_{k+1} B_k + R)^-1 R
//   S_k  = A_k^T S_{k+1} (A_k - B_k K_k) + Q          (symmetrized each step)
//   v_k  = (A_k - B_k K_k)^T v_{k+1} - K_k^T R u_k + Q x_k
// The inner inverse is applied through a Cholesky factorization;
// NotPositiveDefinite is thrown if it fails.
BackwardPassGains backward_pass(const std::vector<Linearization>& lin,
                                const Eigen::Ref<const Eigen::MatrixXd>& trajectory,
                                const Eigen::Ref<const Eigen::MatrixXd>& controls,
                                const QuadraticCost& cost);

struct ForwardPassResult {
  Eigen::MatrixXd controls;
  Eigen::MatrixXd trajectory;
  double cost = 0.0;
};

// Applies du_k = -K_k dx_k - Kv_k v_{k+1} - Ku_k u_k with dx_0 = 0,
// dx_{k+1} = x_{k+1}^new - x_{k+1}^nominal, re-simulating as it goes.
ForwardPassResult forward_pass(const dyn::ControlledSystem& sys,
                               const BackwardPassGains& gains,
                               const Eigen::Ref<const Eigen::MatrixXd>& trajectory,
                               const Eigen::Ref<const Eigen::MatrixXd>& controls,
                               const QuadraticCost& cost);

// Full driver: rollout, then backward + forward passes until the relative
// cost change drops to config.tol (never on the first pass) or the pass cap
// is hit (MaxIterationsReached, carrying the partial result).
IlqrResult ilqr_solve(const dyn::ControlledSystem& sys, const QuadraticCost& cost,
                      const Eigen::Ref<const Eigen::VectorXd>& x0,
                      const Eigen::Ref<const Eigen::MatrixXd>& u_init,
                      const IlqrConfig& config);

// Finite-horizon discrete-time LQR for x_{k+1} = A x_k + B u_k under the same
// tracking cost, solved by an affine value-function recursion
// V_k(x) = x^T P_k x + 2 q_k^T x + const. Exact for LTI dynamics; serves as
// an independent reference for the one-pass optimality of the method above.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> dt_lqr(
    const Eigen::Ref<const Eigen::MatrixXd>& A,
    const Eigen::Ref<const Eigen::MatrixXd>& B, const QuadraticCost& cost,
    int N, const Eigen::Ref<const Eigen::VectorXd>& x0);

using SystemFactory =
    std::function<std::shared_ptr<const dyn::ControlledSystem>(int N)>;

struct CoarseToFineResult {
  IlqrResult result;                  // finest grid
  std::vector<int> stage_iterations;  // one entry per schedule stage
};

// Runs the solver on the coarsest horizon, prolongs controls by zero-order
// hold to the next horizon, and repeats. Each schedule entry must divide the
// next.
CoarseToFineResult coarse_to_fine(const SystemFactory& factory,
                                  const QuadraticCost& cost,
                                  const Eigen::Ref<const Eigen::VectorXd>& x0,
                                  const std::vector<int>& schedule,
                                  const IlqrConfig& config);

}  // namespace ilqr
}  // namespace romctl
