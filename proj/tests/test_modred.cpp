#include "romctl/modred.hpp"

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "test_helpers.hpp"

using namespace romctl;

namespace {

mateq::LtiSystem random_lti(std::mt19937_64& rng, Eigen::Index n,
                            Eigen::Index m, Eigen::Index p) {
  mateq::LtiSystem sys;
  sys.A = testutil::random_hurwitz(rng, n);
  sys.B = testutil::random_matrix(rng, n, m);
  sys.C = testutil::random_matrix(rng, p, n);
  return sys;
}

// transfer function C (sI - A)^-1 B at s = i omega
Eigen::MatrixXcd transfer(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                          const Eigen::MatrixXd& C, double omega) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXcd M = -A.cast<std::complex<double>>();
  M.diagonal().array() += std::complex<double>(0.0, omega);
  return C.cast<std::complex<double>>() *
         M.partialPivLu().solve(B.cast<std::complex<double>>());
}

double hinf_sample_gap(const mateq::LtiSystem& fom, const Eigen::MatrixXd& A_r,
                       const Eigen::MatrixXd& B_r, const Eigen::MatrixXd& C_r) {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double omega = std::pow(10.0, -2.0 + 4.0 * i / 49.0);
    const Eigen::MatrixXcd gap = transfer(fom.A, fom.B, fom.C, omega) -
                                 transfer(A_r, B_r, C_r, omega);
    worst = std::max(worst,
                     gap.jacobiSvd().singularValues().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_CASE("balanced_truncation: balancing an already balanced system is the identity") {
  mateq::LtiSystem sys;
  sys.A = Eigen::MatrixXd::Zero(2, 2);
  sys.A.diagonal() << -1.0, -2.0;
  sys.B = Eigen::MatrixXd::Identity(2, 2);
  sys.C = Eigen::MatrixXd::Identity(2, 2);
  // P = Q = diag(1/2, 1/4): already balanced with a decreasing ladder
  const auto basis = modred::balanced_truncation(sys, 2);
  CHECK(basis.r == 2);
  CHECK(!basis.rank_clamped);
  CHECK((basis.T_r.cwiseAbs() - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-10);
  CHECK((basis.T_l.cwiseAbs() - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-10);
  CHECK(basis.singular_values(0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(basis.singular_values(1) == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("balanced_truncation: r = n is an exact state-space equivalent") {
  std::mt19937_64 rng(31);
  const mateq::LtiSystem sys = random_lti(rng, 6, 2, 2);
  const auto basis = modred::balanced_truncation(sys, 6);
  REQUIRE(basis.r == 6);
  const Eigen::MatrixXd A_r = basis.T_l * sys.A * basis.T_r;
  const Eigen::MatrixXd B_r = basis.T_l * sys.B;
  const Eigen::MatrixXd C_r = sys.C * basis.T_r;
  std::uniform_real_distribution<double> freq(-2.0, 2.0);
  for (int i = 0; i < 10; ++i) {
    const double omega = std::pow(10.0, freq(rng));
    const Eigen::MatrixXcd gap =
        transfer(sys.A, sys.B, sys.C, omega) - transfer(A_r, B_r, C_r, omega);
    CHECK(gap.norm() < 1e-8);
  }
}

TEST_CASE("balanced_truncation: bi-orthogonality holds for every returned basis") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 15; ++trial) {
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng() % 7);
    const mateq::LtiSystem sys = random_lti(rng, n, 2, 2);
    const Eigen::Index r = 1 + static_cast<Eigen::Index>(rng() % n);
    for (auto mode : {modred::TruncationMode::kPretruncate,
                      modred::TruncationMode::kFullSvd}) {
      const auto basis = modred::balanced_truncation(sys, r, mode);
      const Eigen::MatrixXd eye =
          Eigen::MatrixXd::Identity(basis.r, basis.r);
      CHECK((basis.T_l * basis.T_r - eye).cwiseAbs().maxCoeff() <= 1e-8);
      for (Eigen::Index i = 1; i < basis.singular_values.size(); ++i) {
        CHECK(basis.singular_values(i) <= basis.singular_values(i - 1) + 1e-14);
      }
    }
  }
}

TEST_CASE("balanced_truncation: reference mode reproduces diagonal ROM Gramians") {
  std::mt19937_64 rng(33);
  const mateq::LtiSystem sys = random_lti(rng, 10, 1, 1);
  const auto basis =
      modred::balanced_truncation(sys, 4, modred::TruncationMode::kFullSvd);
  REQUIRE(basis.r == 4);
  const Eigen::MatrixXd A_r = basis.T_l * sys.A * basis.T_r;
  const Eigen::MatrixXd B_r = basis.T_l * sys.B;
  const Eigen::MatrixXd C_r = sys.C * basis.T_r;
  const Eigen::MatrixXd P_r = mateq::solve_lyapunov(A_r, B_r * B_r.transpose());
  const Eigen::MatrixXd Q_r =
      mateq::solve_lyapunov(A_r.transpose(), C_r.transpose() * C_r);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(4, 4);
  sigma.diagonal() = basis.singular_values.head(4);
  CHECK((P_r - sigma).norm() <= 1e-6 * sigma.norm());
  CHECK((Q_r - sigma).norm() <= 1e-6 * sigma.norm());
}

TEST_CASE("balanced_truncation: truncation monotonicity in the reference mode") {
  std::mt19937_64 rng(34);
  const mateq::LtiSystem sys = random_lti(rng, 9, 2, 2);
  const auto full =
      modred::balanced_truncation(sys, 7, modred::TruncationMode::kFullSvd);
  for (Eigen::Index r = 1; r < 7; ++r) {
    const auto small =
        modred::balanced_truncation(sys, r, modred::TruncationMode::kFullSvd);
    CHECK((small.T_r - full.T_r.leftCols(r)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((small.T_l - full.T_l.topRows(r)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("balanced_truncation: rank clamping is flagged") {
  mateq::LtiSystem sys;
  sys.A = -Eigen::MatrixXd::Identity(4, 4);
  sys.B = Eigen::MatrixXd::Zero(4, 1);
  sys.B(0, 0) = 1.0;  // controllability Gramian has rank 1
  sys.C = Eigen::MatrixXd::Identity(4, 4);
  // The observability Gramian is a multiple of the identity here, so the
  // ordering of its factor columns is arbitrary and the pretruncated product
  // can lose the controllable direction entirely; the full-SVD reference mode
  // recovers it. Both must clamp and flag.
  const auto pre = modred::balanced_truncation(sys, 3);
  CHECK(pre.rank_clamped);
  CHECK(pre.r <= 1);
  const auto full =
      modred::balanced_truncation(sys, 3, modred::TruncationMode::kFullSvd);
  CHECK(full.rank_clamped);
  CHECK(full.r == 1);
  CHECK((full.T_l * full.T_r - Eigen::MatrixXd::Identity(1, 1)).norm() < 1e-10);
}

TEST_CASE("lqg_balanced_truncation: scalar system has the closed-form ladder") {
  mateq::LtiSystem sys;
  sys.A = -Eigen::MatrixXd::Identity(1, 1);
  sys.B = Eigen::MatrixXd::Identity(1, 1);
  sys.C = Eigen::MatrixXd::Identity(1, 1);
  const auto basis = modred::lqg_balanced_truncation(
      sys, Eigen::MatrixXd::Identity(1, 1), 1);
  const double expected = std::sqrt(2.0) - 1.0;  // P = Q = sqrt(2) - 1
  CHECK(basis.singular_values(0) == doctest::Approx(expected).epsilon(1e-10));
  CHECK((basis.T_l * basis.T_r - Eigen::MatrixXd::Identity(1, 1)).norm() < 1e-10);
}

TEST_CASE("lqg_balanced_truncation: B = 0 degenerates like plain BT") {
  std::mt19937_64 rng(35);
  mateq::LtiSystem sys;
  sys.A = testutil::random_hurwitz(rng, 4);
  sys.B = Eigen::MatrixXd::Zero(4, 2);
  sys.C = testutil::random_matrix(rng, 2, 4);
  // both controllability-side solutions vanish, so both methods clamp to 0
  const auto bt = modred::balanced_truncation(sys, 2);
  const auto lqg =
      modred::lqg_balanced_truncation(sys, Eigen::MatrixXd::Identity(2, 2), 2);
  CHECK(bt.r == 0);
  CHECK(lqg.r == 0);
  CHECK(bt.rank_clamped);
  CHECK(lqg.rank_clamped);
  CHECK(bt.singular_values.size() == lqg.singular_values.size());
}

TEST_CASE("tustin: pure integrator, round trip, and exact-discretization limit") {
  const double dt = 0.01;
  // A_d = I maps to A_c = 0
  const auto [A0, B0] = modred::tustin_d2c(Eigen::MatrixXd::Identity(3, 3),
                                           Eigen::MatrixXd::Ones(3, 1), dt);
  CHECK(A0.norm() == doctest::Approx(0.0).epsilon(1e-14));

  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 6);
    const Eigen::MatrixXd A_d = testutil::random_schur_stable(rng, n, 0.95);
    const Eigen::MatrixXd B_d = testutil::random_matrix(rng, n, 2);
    const auto [A_c, B_c] = modred::tustin_d2c(A_d, B_d, dt);
    const auto [A_back, B_back] = modred::tustin_c2d(A_c, B_c, dt);
    CHECK((A_back - A_d).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((B_back - B_d).cwiseAbs().maxCoeff() <= 1e-10);
  }

  // scalar a_d = exp(a dt) for a = -1 recovers a to O(dt^2)
  Eigen::MatrixXd a_d(1, 1), b_d(1, 1);
  a_d << std::exp(-dt);
  b_d << 1.0;
  const auto [a_c, b_c] = modred::tustin_d2c(a_d, b_d, dt);
  CHECK(std::abs(a_c(0, 0) + 1.0) < dt * dt);

  Eigen::MatrixXd at_minus_one = -Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(modred::tustin_d2c(at_minus_one, Eigen::MatrixXd::Ones(2, 1), dt),
                  SingularMatrix);
}

TEST_CASE("project_quadratic: identity basis reproduces the system") {
  std::mt19937_64 rng(37);
  const Eigen::Index n = 5;
  const auto G = testutil::random_sparse_quadratic(rng, n, 0.2);
  const auto sys = dyn::QuadraticSystem::make(
      testutil::random_hurwitz(rng, n), G, testutil::random_matrix(rng, n, 2),
      testutil::random_matrix(rng, 2, n), testutil::random_vector(rng, n));
  modred::ReductionBasis eye;
  eye.T_r = Eigen::MatrixXd::Identity(n, n);
  eye.T_l = Eigen::MatrixXd::Identity(n, n);
  eye.r = n;
  const auto rom = modred::project_quadratic(sys, eye);
  CHECK((rom.A - sys.A).norm() < 1e-14);
  CHECK((rom.B - sys.B).norm() < 1e-14);
  CHECK((rom.C - sys.C).norm() < 1e-14);
  CHECK((rom.x0 - sys.x0).norm() < 1e-14);
  CHECK((Eigen::MatrixXd(rom.G) - Eigen::MatrixXd(sys.G)).norm() < 1e-14);
}

TEST_CASE("project_quadratic: consistency with projecting states") {
  std::mt19937_64 rng(38);
  const Eigen::Index n = 12, r = 4;
  const auto G = testutil::random_sparse_quadratic(rng, n, 0.1);
  const auto sys = dyn::QuadraticSystem::make(
      testutil::random_hurwitz(rng, n), G, testutil::random_matrix(rng, n, 3),
      testutil::random_matrix(rng, 2, n), testutil::random_vector(rng, n));
  // a random bi-orthogonal pair: T_l = (W^T T_r)^-1 W^T
  const Eigen::MatrixXd T_r = testutil::random_matrix(rng, n, r);
  const Eigen::MatrixXd W = testutil::random_matrix(rng, n, r);
  modred::ReductionBasis basis;
  basis.T_r = T_r;
  basis.T_l = (W.transpose() * T_r).partialPivLu().solve(W.transpose());
  basis.r = r;
  const auto rom = modred::project_quadratic(sys, basis);

  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd x_r = testutil::random_vector(rng, r);
    const Eigen::VectorXd lifted = basis.T_r * x_r;
    const Eigen::VectorXd expected = basis.T_l * dyn::quad_apply(sys.G, lifted);
    const Eigen::VectorXd actual = dyn::quad_apply(rom.G, x_r);
    CHECK((actual - expected).cwiseAbs().maxCoeff() <=
          1e-10 * (1.0 + expected.cwiseAbs().maxCoeff()));
  }
  // G = 0 reduces to the projected LTI triple
  Eigen::SparseMatrix<double> G0(n, n * n);
  const auto sys0 = dyn::QuadraticSystem::make(sys.A, G0, sys.B, sys.C, sys.x0);
  const auto rom0 = modred::project_quadratic(sys0, basis);
  CHECK(Eigen::MatrixXd(rom0.G).norm() == 0.0);
  CHECK((rom0.A - basis.T_l * sys.A * basis.T_r).norm() < 1e-12);
}

TEST_CASE("project_cost: reproduces C_r^T C_r when Q = C^T C") {
  std::mt19937_64 rng(39);
  const Eigen::Index n = 8, r = 3, p = 8;
  const Eigen::MatrixXd C = Eigen::MatrixXd::Identity(p, n);
  const auto cost = ilqr::QuadraticCost::make(
      C.transpose() * C, C.transpose() * C, testutil::random_spd(rng, 2),
      Eigen::VectorXd::Zero(n));
  modred::ReductionBasis basis;
  basis.T_r = testutil::random_matrix(rng, n, r);
  const Eigen::MatrixXd W = testutil::random_matrix(rng, n, r);
  basis.T_l = (W.transpose() * basis.T_r).partialPivLu().solve(W.transpose());
  basis.r = r;
  const auto rc = modred::project_cost(cost, basis);
  const Eigen::MatrixXd C_r = C * basis.T_r;
  CHECK((rc.Q - C_r.transpose() * C_r).norm() < 1e-12);
  CHECK((rc.R - cost.R).norm() == 0.0);
  CHECK(rc.x_star.size() == r);
}

TEST_CASE("singular_value_report: normalization and the self-dual SISO case") {
  std::mt19937_64 rng(40);
  // symmetric realization: A = A^T stable, B = C^T, so P = Q and the ladder
  // equals the eigenvalues of P
  const Eigen::Index n = 6;
  Eigen::MatrixXd A = testutil::random_psd(rng, n);
  A = -(A + Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd B = testutil::random_matrix(rng, n, 1);
  mateq::LtiSystem sys{A, B, B.transpose()};
  const auto rep =
      modred::singular_value_report(sys, Eigen::MatrixXd::Identity(1, 1));
  CHECK(rep.bt(0) == doctest::Approx(1.0));
  CHECK(rep.lqgbt(0) == doctest::Approx(1.0));

  const Eigen::MatrixXd P = mateq::solve_lyapunov(A, B * B.transpose());
  Eigen::VectorXd eigs =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(P).eigenvalues().reverse();
  const Eigen::VectorXd expected = eigs / eigs(0);
  REQUIRE(rep.bt.size() == expected.size());
  CHECK((rep.bt - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("balanced truncation: sampled H-infinity error within twice the tail sum") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 6 + 2 * (trial % 3);
    const mateq::LtiSystem sys = random_lti(rng, n, 2, 2);
    const Eigen::Index r = n / 2;
    const auto basis =
        modred::balanced_truncation(sys, r, modred::TruncationMode::kFullSvd);
    REQUIRE(basis.r == r);
    const Eigen::MatrixXd A_r = basis.T_l * sys.A * basis.T_r;
    const Eigen::MatrixXd B_r = basis.T_l * sys.B;
    const Eigen::MatrixXd C_r = sys.C * basis.T_r;
    const double tail = basis.singular_values.tail(basis.singular_values.size() - r).sum();
    CHECK(hinf_sample_gap(sys, A_r, B_r, C_r) <= 2.0 * tail + 1e-8);
  }
}
