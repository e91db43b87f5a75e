#include "romctl/ilqr.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace romctl {
namespace ilqr {

namespace {

void require_symmetric(const Eigen::MatrixXd& M, const char* name) {
  if ((M - M.transpose()).norm() > 1e-12 * std::max(1.0, M.norm())) {
    throw NotPsd(std::string(name) + " must be symmetric");
  }
}

void require_psd(const Eigen::MatrixXd& M, const char* name) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, M.operatorNorm());
  if (eig.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw NotPsd(std::string(name) + " must be positive semidefinite");
  }
}

}  // namespace

QuadraticCost QuadraticCost::make(Eigen::MatrixXd Q, Eigen::MatrixXd Qf,
                                  Eigen::MatrixXd R, Eigen::VectorXd x_star) {
  const Eigen::Index n = Q.rows();
  if (Q.cols() != n || Qf.rows() != n || Qf.cols() != n || x_star.size() != n) {
    throw DimensionMismatch("QuadraticCost: inconsistent state dimensions");
  }
  if (R.rows() != R.cols()) throw DimensionMismatch("R must be square");
  require_symmetric(Q, "Q");
  require_symmetric(Qf, "Qf");
  require_symmetric(R, "R");
  require_psd(Q, "Q");
  require_psd(Qf, "Qf");
  if (Eigen::LLT<Eigen::MatrixXd>(R).info() != Eigen::Success) {
    throw NotPositiveDefinite("R must be positive definite");
  }
  QuadraticCost cost;
  cost.Q = std::move(Q);
  cost.Qf = std::move(Qf);
  cost.R = std::move(R);
  cost.x_star = std::move(x_star);
  return cost;
}

double evaluate_cost(const QuadraticCost& cost,
                     const Eigen::Ref<const Eigen::MatrixXd>& trajectory,
                     const Eigen::Ref<const Eigen::MatrixXd>& controls) {
  const Eigen::Index N = controls.rows();
  if (trajectory.rows() != N + 1) {
    throw DimensionMismatch("evaluate_cost: trajectory must have N+1 rows");
  }
  if (trajectory.cols() != cost.n() || controls.cols() != cost.m()) {
    throw DimensionMismatch("evaluate_cost: dimension mismatch");
  }
  const Eigen::VectorXd terminal =
      trajectory.row(N).transpose() - cost.x_star;
  double J = terminal.dot(cost.Qf * terminal);
  for (Eigen::Index k = 0; k < N; ++k) {
    const Eigen::VectorXd x = trajectory.row(k).transpose();
    const Eigen::VectorXd u = controls.row(k).transpose();
    J += x.dot(cost.Q * x) + u.dot(cost.R * u);
  }
  return J;
}

BackwardPassGains backward_pass(const std::vector<Linearization>& lin,
                                const Eigen::Ref<const Eigen::MatrixXd>& trajectory,
                                const Eigen::Ref<const Eigen::MatrixXd>& controls,
                                const QuadraticCost& cost) {
  const Eigen::Index N = controls.rows();
  if (static_cast<Eigen::Index>(lin.size()) != N) {
    throw DimensionMismatch("backward_pass: one linearization per step required");
  }
  if (trajectory.rows() != N + 1) {
    throw DimensionMismatch("backward_pass: trajectory must have N+1 rows");
  }

  BackwardPassGains g;
  g.K.resize(N);
  g.Kv.resize(N);
  g.Ku.resize(N);
  g.S.resize(N + 1);
  g.v.resize(N + 1);
  g.S[N] = cost.Qf;
  g.v[N] = cost.Qf * (trajectory.row(N).transpose() - cost.x_star);

  for (Eigen::Index k = N - 1; k >= 0; --k) {
    const Eigen::MatrixXd& A = lin[k].A;
    const Eigen::MatrixXd& B = lin[k].B;
    const Eigen::MatrixXd BtS = B.transpose() * g.S[k + 1];
    Eigen::LLT<Eigen::MatrixXd> llt(BtS * B + cost.R);
    if (llt.info() != Eigen::Success) {
      std::ostringstream os;
      os << "backward_pass: B^T S B + R not positive definite at k = " << k;
      throw NotPositiveDefinite(os.str());
    }
    g.K[k] = llt.solve(BtS * A);
    g.Kv[k] = llt.solve(B.transpose());
    g.Ku[k] = llt.solve(cost.R);
    Eigen::MatrixXd S = A.transpose() * g.S[k + 1] * (A - B * g.K[k]) + cost.Q;
    g.S[k] = 0.5 * (S + S.transpose());
    g.v[k] = (A - B * g.K[k]).transpose() * g.v[k + 1] -
             g.K[k].transpose() * (cost.R * controls.row(k).transpose()) +
             cost.Q * trajectory.row(k).transpose();
  }
  return g;
}

ForwardPassResult forward_pass(const dyn::ControlledSystem& sys,
                               const BackwardPassGains& gains,
                               const Eigen::Ref<const Eigen::MatrixXd>& trajectory,
                               const Eigen::Ref<const Eigen::MatrixXd>& controls,
                               const QuadraticCost& cost) {
  const Eigen::Index N = controls.rows();
  ForwardPassResult out;
  out.controls.resize(N, controls.cols());
  out.trajectory.resize(N + 1, trajectory.cols());
  out.trajectory.row(0) = trajectory.row(0);

  Eigen::VectorXd x = trajectory.row(0).transpose();
  Eigen::VectorXd dx = Eigen::VectorXd::Zero(trajectory.cols());
  for (Eigen::Index k = 0; k < N; ++k) {
    const Eigen::VectorXd u_nom = controls.row(k).transpose();
    const Eigen::VectorXd du =
        -gains.K[k] * dx - gains.Kv[k] * gains.v[k + 1] - gains.Ku[k] * u_nom;
    const Eigen::VectorXd u = u_nom + du;
    x = sys.step(x, u);
    dx = x - trajectory.row(k + 1).transpose();
    out.controls.row(k) = u.transpose();
    out.trajectory.row(k + 1) = x.transpose();
  }
  out.cost = evaluate_cost(cost, out.trajectory, out.controls);
  return out;
}

IlqrResult ilqr_solve(const dyn::ControlledSystem& sys, const QuadraticCost& cost,
                      const Eigen::Ref<const Eigen::VectorXd>& x0,
                      const Eigen::Ref<const Eigen::MatrixXd>& u_init,
                      const IlqrConfig& config) {
  const Eigen::Index N = u_init.rows();
  if (N < 1) throw DimensionMismatch("ilqr_solve: need at least one step");
  if (config.tol <= 0.0 || config.max_iter < 1) {
    throw ConfigInvalid("ilqr_solve: tol must be > 0 and max_iter >= 1");
  }
  if (!u_init.allFinite()) {
    throw ConfigInvalid("ilqr_solve: initial controls must be finite");
  }

  IlqrResult res;
  res.controls = u_init;
  res.trajectory = dyn::simulate(sys, x0, res.controls);
  double J = evaluate_cost(cost, res.trajectory, res.controls);
  if (config.record_history) res.cost_history.push_back(J);

  IlqrResult best = res;
  double best_cost = J;
  int growth_streak = 0;

  for (int pass = 1; pass <= config.max_iter; ++pass) {
    std::vector<Linearization> lin(N);
    for (Eigen::Index k = 0; k < N; ++k) {
      auto [A, B] = sys.jacobians(res.trajectory.row(k).transpose(),
                                  res.controls.row(k).transpose());
      lin[k] = {std::move(A), std::move(B)};
    }
    BackwardPassGains gains =
        backward_pass(lin, res.trajectory, res.controls, cost);
    ForwardPassResult fwd =
        forward_pass(sys, gains, res.trajectory, res.controls, cost);

    const double J_old = J;
    J = fwd.cost;
    res.controls = std::move(fwd.controls);
    res.trajectory = std::move(fwd.trajectory);
    if (config.record_history) res.cost_history.push_back(J);

    if (J <= best_cost) {
      best = res;
      best_cost = J;
    }
    growth_streak = J > J_old ? growth_streak + 1 : 0;
    if (growth_streak >= 5) {
      std::ostringstream os;
      os << "ilqr_solve: cost grew for 5 consecutive passes (last J = " << J
         << ", best J = " << best_cost << " at pass " << pass << ")";
      best.iterations = pass;
      throw MaxIterationsReached(os.str(), std::move(best));
    }

    // The first pass never terminates; afterwards stop once the relative
    // change falls to tol. The confirming pass is excluded from the count.
    if (pass > 1 && std::abs(J_old - J) <= config.tol * std::abs(J_old)) {
      res.iterations = pass - 1;
      return res;
    }
  }
  best.iterations = config.max_iter;
  throw MaxIterationsReached("ilqr_solve: pass cap reached without meeting tol",
                             std::move(best));
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> dt_lqr(
    const Eigen::Ref<const Eigen::MatrixXd>& A,
    const Eigen::Ref<const Eigen::MatrixXd>& B, const QuadraticCost& cost,
    int N, const Eigen::Ref<const Eigen::VectorXd>& x0) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  if (A.cols() != n || B.rows() != n || cost.n() != n || cost.m() != m ||
      x0.size() != n) {
    throw DimensionMismatch("dt_lqr: dimension mismatch");
  }
  if (N < 1) throw DimensionMismatch("dt_lqr: N must be >= 1");

  // Affine value function V_k(x) = x^T P_k x + 2 q_k^T x + c_k with
  // P_N = Qf, q_N = -Qf x*; the optimal control is u_k = -F_k x_k - g_k.
  std::vector<Eigen::MatrixXd> F(N);
  std::vector<Eigen::VectorXd> g(N);
  Eigen::MatrixXd P = cost.Qf;
  Eigen::VectorXd q = -cost.Qf * cost.x_star;
  for (int k = N - 1; k >= 0; --k) {
    const Eigen::MatrixXd BtP = B.transpose() * P;
    Eigen::LLT<Eigen::MatrixXd> llt(BtP * B + cost.R);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("dt_lqr: B^T P B + R not positive definite");
    }
    F[k] = llt.solve(BtP * A);
    g[k] = llt.solve(B.transpose() * q);
    Eigen::MatrixXd P_new = cost.Q + A.transpose() * P * (A - B * F[k]);
    q = (A - B * F[k]).transpose() * q;
    P = 0.5 * (P_new + P_new.transpose());
  }

  Eigen::MatrixXd controls(N, m);
  Eigen::MatrixXd traj(N + 1, n);
  Eigen::VectorXd x = x0;
  traj.row(0) = x.transpose();
  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXd u = -F[k] * x - g[k];
    controls.row(k) = u.transpose();
    x = A * x + B * u;
    traj.row(k + 1) = x.transpose();
  }
  return {controls, traj};
}

CoarseToFineResult coarse_to_fine(const SystemFactory& factory,
                                  const QuadraticCost& cost,
                                  const Eigen::Ref<const Eigen::VectorXd>& x0,
                                  const std::vector<int>& schedule,
                                  const IlqrConfig& config) {
  if (schedule.empty()) throw ConfigInvalid("coarse_to_fine: empty schedule");
  for (size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i] <= schedule[i - 1] || schedule[i] % schedule[i - 1] != 0) {
      throw ConfigInvalid("coarse_to_fine: schedule must be strictly "
                          "increasing with each N dividing the next");
    }
  }

  CoarseToFineResult out;
  Eigen::MatrixXd u;
  for (size_t stage = 0; stage < schedule.size(); ++stage) {
    const int N = schedule[stage];
    std::shared_ptr<const dyn::ControlledSystem> sys = factory(N);
    if (stage == 0) {
      u = Eigen::MatrixXd::Zero(N, sys->control_dim());
    } else {
      // zero-order hold prolongation from the previous stage
      const int ratio = N / schedule[stage - 1];
      Eigen::MatrixXd fine(N, u.cols());
      for (Eigen::Index k = 0; k < u.rows(); ++k) {
        fine.middleRows(k * ratio, ratio) = u.row(k).replicate(ratio, 1);
      }
      u = std::move(fine);
    }
    out.result = ilqr_solve(*sys, cost, x0, u, config);
    out.stage_iterations.push_back(out.result.iterations);
    u = out.result.controls;
  }
  return out;
}

}  // namespace ilqr
}  // namespace romctl
