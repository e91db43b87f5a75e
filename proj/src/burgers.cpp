#include "romctl/burgers.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace romctl {
namespace burgers {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Element integrals of hat-function products on the reference element:
// int_0^1 psi_p psi_q ds with psi_0 = 1 - s, psi_1 = s.
constexpr double kPsiPsi[2][2] = {{1.0 / 3.0, 1.0 / 6.0},
                                  {1.0 / 6.0, 1.0 / 3.0}};

}  // namespace

void BurgersConfig::validate() const {
  if (n < 3) throw ConfigInvalid("burgers: n must be >= 3");
  if (m < 1) throw ConfigInvalid("burgers: m must be >= 1");
  if (epsilon <= 0.0) throw ConfigInvalid("burgers: epsilon must be > 0");
  if (t_final <= 0.0) throw ConfigInvalid("burgers: t_final must be > 0");
  if (steps < 1) throw ConfigInvalid("burgers: steps must be >= 1");
  if (r_scale <= 0.0) throw ConfigInvalid("burgers: r_scale must be > 0");
}

Eigen::VectorXd grid_nodes(const BurgersConfig& config) {
  config.validate();
  Eigen::VectorXd xi(config.n);
  for (int i = 0; i < config.n; ++i) xi(i) = static_cast<double>(i) / config.n;
  return xi;
}

Eigen::MatrixXd mass_matrix(const BurgersConfig& config) {
  config.validate();
  const int n = config.n;
  const double h = 1.0 / n;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int e = 0; e < n; ++e) {
    const int g[2] = {e, (e + 1) % n};
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) {
        M(g[p], g[q]) += h * kPsiPsi[p][q];
      }
    }
  }
  return M;
}

Eigen::VectorXd initial_state(const BurgersConfig& config) {
  const Eigen::VectorXd xi = grid_nodes(config);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(config.n);
  for (int i = 0; i < config.n; ++i) {
    if (xi(i) <= 0.5) {
      const double s = std::sin(2.0 * kPi * xi(i));
      x0(i) = 0.5 * s * s;
    }
  }
  return x0;
}

dyn::QuadraticSystem assemble_burgers(const BurgersConfig& config) {
  config.validate();
  const int n = config.n;
  const double h = 1.0 / n;

  // Periodic stiffness for -z_xx tested with hat functions.
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (int e = 0; e < n; ++e) {
    const int g[2] = {e, (e + 1) % n};
    const double grad[2] = {-1.0 / h, 1.0 / h};
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) {
        K(g[p], g[q]) += h * grad[p] * grad[q];
      }
    }
  }

  // Convection tensor: testing -1/2 (z^2)_x with phi_i and integrating by
  // parts (periodic boundary) gives +1/2 int phi_j phi_k phi_i' dxi per
  // coefficient pair (j, k). phi_i' is constant on each element, so the
  // element contribution is sign(i_local) * int psi_p psi_q.
  std::vector<Eigen::Triplet<double>> conv;
  conv.reserve(static_cast<size_t>(n) * 8);
  for (int e = 0; e < n; ++e) {
    const int g[2] = {e, (e + 1) % n};
    const double dsign[2] = {-1.0, 1.0};
    for (int rloc = 0; rloc < 2; ++rloc) {
      for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) {
          conv.emplace_back(g[rloc],
                            static_cast<Eigen::Index>(g[p]) * n + g[q],
                            0.5 * dsign[rloc] * kPsiPsi[p][q]);
        }
      }
    }
  }
  Eigen::SparseMatrix<double> G_conv(n, static_cast<Eigen::Index>(n) * n);
  G_conv.setFromTriplets(conv.begin(), conv.end());

  // Control loads: nodal samples of the interval indicators, entering the
  // semi-discrete system as load vectors (so the assembled input matrix is
  // M^-1 chi). Each node belongs to exactly one interval; with n = 101 and
  // m = 5 the interval edges fall between nodes.
  Eigen::MatrixXd B_load = Eigen::MatrixXd::Zero(n, config.m);
  for (int i = 0; i < n; ++i) {
    const double xi = static_cast<double>(i) / n;
    const int k = std::min(static_cast<int>(xi * config.m), config.m - 1);
    B_load(i, k) = 1.0;
  }

  // Apply the inverse mass matrix once at assembly.
  Eigen::LLT<Eigen::MatrixXd> M_llt(mass_matrix(config));
  if (M_llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("burgers: mass matrix factorization failed");
  }
  Eigen::MatrixXd A = -config.epsilon * M_llt.solve(K);
  Eigen::MatrixXd B = M_llt.solve(B_load);

  // M^-1 only densifies within columns, so G stays column-sparse.
  std::vector<Eigen::Triplet<double>> g_trips;
  Eigen::VectorXd col(n);
  for (int c = 0; c < G_conv.outerSize(); ++c) {
    col.setZero();
    bool any = false;
    for (Eigen::SparseMatrix<double>::InnerIterator it(G_conv, c); it; ++it) {
      col(it.row()) = it.value();
      any = true;
    }
    if (!any) continue;
    const Eigen::VectorXd solved = M_llt.solve(col);
    for (int i = 0; i < n; ++i) {
      if (solved(i) != 0.0) g_trips.emplace_back(i, c, solved(i));
    }
  }
  Eigen::SparseMatrix<double> G(n, G_conv.cols());
  G.setFromTriplets(g_trips.begin(), g_trips.end());

  return dyn::QuadraticSystem::make(std::move(A), std::move(G), std::move(B),
                                    Eigen::MatrixXd::Identity(n, n),
                                    initial_state(config));
}

ilqr::QuadraticCost burgers_cost(const BurgersConfig& config) {
  config.validate();
  return ilqr::QuadraticCost::make(
      Eigen::MatrixXd::Identity(config.n, config.n),
      Eigen::MatrixXd::Identity(config.n, config.n),
      config.r_scale * Eigen::MatrixXd::Identity(config.m, config.m),
      Eigen::VectorXd::Zero(config.n));
}

double mass_conservation_check(const BurgersConfig& config,
                               const Eigen::Ref<const Eigen::MatrixXd>& trajectory) {
  if (trajectory.cols() != config.n) {
    throw DimensionMismatch("mass_conservation_check: trajectory width");
  }
  const Eigen::VectorXd weights =
      mass_matrix(config) * Eigen::VectorXd::Ones(config.n);
  const double mass0 = weights.dot(trajectory.row(0).transpose());
  double drift = 0.0;
  for (Eigen::Index k = 1; k < trajectory.rows(); ++k) {
    drift = std::max(drift,
                     std::abs(weights.dot(trajectory.row(k).transpose()) - mass0));
  }
  return drift;
}

LinearizedLti linearized_lti(const BurgersConfig& config) {
  const dyn::QuadraticSystem sys = assemble_burgers(config);
  LinearizedLti out;
  out.sys.B = sys.B;
  out.sys.C = sys.C;
  out.sys.A = sys.A;
  // Constants are in the kernel of the periodic stiffness matrix, so A has a
  // zero eigenvalue and the balancing solvers need a strictly Hurwitz matrix.
  if (mateq::spectral_abscissa(out.sys.A) >= -1e-12) {
    out.shift = 1e-6;
    out.sys.A.diagonal().array() -= out.shift;
  }
  return out;
}

}  // namespace burgers
}  // namespace romctl
