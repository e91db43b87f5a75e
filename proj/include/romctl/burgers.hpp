#pragma once

#include <Eigen/Core>

#include "romctl/dynamics.hpp"
#include "romctl/errors.hpp"
#include "romctl/ilqr.hpp"
#include "romctl/mateq.hpp"

namespace romctl {
namespace burgers {

// Periodic 1D viscous Burgers testbed
//   zdot = eps z_xx - 1/2 (z^2)_x + sum_k chi_[(k-1)/m, k/m] u_k
// on [0,1) with z(x,0) = 0.5 sin(2 pi x)^2 on [0, 0.5], zero otherwise,
// discretized with linear finite elements on a uniform grid of n nodes.
struct BurgersConfig {
  int n = 101;            // grid nodes (periodic, so n unknowns)
  int m = 5;              // control intervals
  double epsilon = 5e-3;  // viscosity
  double t_final = 5.0;   // horizon in seconds
  int steps = 500;        // time steps N
  double r_scale = 1e3;   // control cost scale, R = r_scale * I_m

  double dt() const { return t_final / steps; }
  void validate() const;
};

// Assembles the semi-discrete system xdot = A x + G (x kron x) + B u, y = x,
// with the mass matrix already inverted into A, G and B. C = I_n.
dyn::QuadraticSystem assemble_burgers(const BurgersConfig& config);

// Q = Qf = C^T C = I_n, R = r_scale * I_m, target x* = 0.
ilqr::QuadraticCost burgers_cost(const BurgersConfig& config);

// Max over k of |1^T M x_k - 1^T M x_0|: drift of the conserved total mass
// along an uncontrolled trajectory.
double mass_conservation_check(const BurgersConfig& config,
                               const Eigen::Ref<const Eigen::MatrixXd>& trajectory);

struct LinearizedLti {
  mateq::LtiSystem sys;
  double shift = 0.0;  // stabilizing shift applied to A (0 when none needed)
};

// LTI triple (A_lin, B, C) from linearizing at the zero state. The periodic
// Laplacian has a zero eigenvalue on constants; when the strict Hurwitz check
// fails, A is shifted by -1e-6 I and the shift is reported.
LinearizedLti linearized_lti(const BurgersConfig& config);

// Node coordinates xi_i = i/n.
Eigen::VectorXd grid_nodes(const BurgersConfig& config);

// Consistent (non-lumped) periodic mass matrix.
Eigen::MatrixXd mass_matrix(const BurgersConfig& config);

// Nodal samples of the initial profile.
Eigen::VectorXd initial_state(const BurgersConfig& config);

}  // namespace burgers
}  // namespace romctl
