#include "dncs/mjls.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "dncs/block_matrix.hpp"
#include "dncs/coupled_riccati.hpp"
#include "dncs/riccati_operators.hpp"
#include "test_support.hpp"

namespace dncs {
namespace {

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

DncsSpec scalar_sensor_spec(double p) {
  DncsSpec spec;
  spec.state_dims = {1};
  spec.remote_input_dim = 1;
  spec.local_input_dims = {1};
  spec.a_blocks = {scalar(2.0)};
  spec.b_local = {scalar(0.0)};
  spec.b_remote = {scalar(1.0)};
  spec.q = scalar(1.0);
  spec.r = Eigen::MatrixXd::Identity(2, 2);
  spec.drop_probs = {p};
  spec.validate();
  return spec;
}

MjlsModel two_mode_toy(double p, double a0, double a1) {
  MjlsModel model;
  model.a = {scalar(a0), scalar(a1)};
  model.b = {scalar(0.0), scalar(0.0)};
  model.q = {scalar(1.0), scalar(1.0)};
  model.r = {scalar(1.0), scalar(1.0)};
  model.theta = Eigen::MatrixXd(2, 2);
  model.theta << 1.0, 0.0, 1.0 - p, p;
  model.validate();
  return model;
}

TEST(ModelValidate, RejectsMalformedInput) {
  MjlsModel model = two_mode_toy(0.2, 0.5, 0.5);
  model.theta(1, 1) = 0.5;  // row no longer sums to 1
  EXPECT_THROW(model.validate(), std::invalid_argument);

  model = two_mode_toy(0.2, 0.5, 0.5);
  model.r[1] = scalar(0.0);
  EXPECT_THROW(model.validate(), std::invalid_argument);

  model = two_mode_toy(0.2, 0.5, 0.5);
  model.a.pop_back();
  EXPECT_THROW(model.validate(), std::invalid_argument);
}

TEST(Auxiliary2c, StructureOfSecondMode) {
  std::mt19937_64 rng(211);
  const Eigen::MatrixXd a = test::random_matrix(rng, 2, 2);
  const Eigen::MatrixXd b10 = test::random_matrix(rng, 2, 2);
  const Eigen::MatrixXd b11 = test::random_matrix(rng, 2, 1);
  const Eigen::MatrixXd q = test::random_psd(rng, 2);
  const Eigen::MatrixXd r = test::random_pd(rng, 3);
  const MjlsModel model = build_auxiliary_2c(a, b10, b11, q, r, 0.3);

  ASSERT_EQ(model.modes(), 2);
  EXPECT_EQ(model.theta(0, 0), 1.0);
  EXPECT_EQ(model.theta(0, 1), 0.0);
  EXPECT_NEAR(model.theta(1, 0), 0.7, 1e-15);
  EXPECT_NEAR(model.theta(1, 1), 0.3, 1e-15);

  EXPECT_TRUE(model.a[0].isApprox(a));
  EXPECT_TRUE(model.a[1].isApprox(a));
  EXPECT_TRUE(model.q[1].isApprox(q));

  // Remote input column is disabled in mode 1 and its cost block replaced by
  // identity so the minimization over that coordinate is inert.
  EXPECT_EQ(model.b[1].leftCols(2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(model.b[1].rightCols(1).isApprox(b11));
  EXPECT_TRUE(
      model.r[1].topLeftCorner(2, 2).isApprox(Eigen::MatrixXd::Identity(2, 2)));
  EXPECT_EQ(model.r[1].topRightCorner(2, 1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(model.r[1].bottomRightCorner(1, 1).isApprox(
      r.bottomRightCorner(1, 1)));
}

TEST(AuxiliaryNc, ThetaAndModeStructure) {
  std::mt19937_64 rng(223);
  DncsSpec spec = test::random_spec(rng, 3);
  for (double& p : spec.drop_probs) p = 0.35;
  const MjlsModel model = build_auxiliary_nc(spec);
  const int n_sub = spec.subsystems();
  ASSERT_EQ(model.modes(), n_sub + 1);

  EXPECT_EQ(model.theta(0, 0), 1.0);
  for (int n = 1; n <= n_sub; ++n) {
    EXPECT_NEAR(model.theta(n, 0), 0.65, 1e-15);
    EXPECT_NEAR(model.theta(n, n), 0.35, 1e-15);
    for (int k = 1; k <= n_sub; ++k) {
      if (k != n) EXPECT_EQ(model.theta(n, k), 0.0);
    }
  }

  EXPECT_TRUE(model.a[0].isApprox(spec.a().data()));
  EXPECT_TRUE(model.b[0].isApprox(spec.b().data()));

  const BlockMatrix state_shape =
      BlockMatrix::Zero(spec.state_partition(), spec.state_partition());
  for (int n = 1; n <= n_sub; ++n) {
    const Eigen::MatrixXd expected_a =
        l_zero(state_shape, spec.a_blocks[n - 1], n - 1, n - 1).data();
    EXPECT_TRUE(model.a[n].isApprox(expected_a));
  }
}

TEST(AuxiliaryNc, SingleSubsystemCoincidesWithTwoController) {
  std::mt19937_64 rng(227);
  const Eigen::MatrixXd a = test::random_matrix(rng, 2, 2);
  const Eigen::MatrixXd b10 = test::random_matrix(rng, 2, 1);
  const Eigen::MatrixXd b11 = test::random_matrix(rng, 2, 1);
  const Eigen::MatrixXd q = test::random_psd(rng, 2);
  const Eigen::MatrixXd r = test::random_pd(rng, 2);
  const double p1 = 0.15;

  const MjlsModel from_2c = build_auxiliary_2c(a, b10, b11, q, r, p1);
  const MjlsModel from_nc =
      build_auxiliary_nc(two_controller_spec(a, b10, b11, q, r, p1));
  ASSERT_EQ(from_2c.modes(), from_nc.modes());
  for (int m = 0; m < 2; ++m) {
    EXPECT_TRUE(from_2c.a[m].isApprox(from_nc.a[m]));
    EXPECT_TRUE(from_2c.b[m].isApprox(from_nc.b[m]));
    EXPECT_TRUE(from_2c.q[m].isApprox(from_nc.q[m]));
    EXPECT_TRUE(from_2c.r[m].isApprox(from_nc.r[m]));
  }
  EXPECT_TRUE(from_2c.theta.isApprox(from_nc.theta));
}

TEST(FiniteRecursions, MatchEqualDimensionRepresentation) {
  std::mt19937_64 rng(229);
  for (int trial = 0; trial < 8; ++trial) {
    const DncsSpec spec = test::random_feasible_spec(rng);
    const int horizon = 9;
    const MjlsRecursions rec =
        mjls_finite_recursions(build_auxiliary_nc(spec), horizon);
    const BarRepresentation bar = bar_representation(spec, horizon);
    double worst = 0.0;
    for (int t = 0; t <= horizon + 1; ++t) {
      worst = std::max(worst,
                       (rec.p[t][0] - bar.p0[t]).cwiseAbs().maxCoeff());
      for (int n = 0; n < spec.subsystems(); ++n) {
        worst = std::max(
            worst, (rec.p[t][n + 1] - bar.pn[t][n]).cwiseAbs().maxCoeff());
      }
    }
    EXPECT_LT(worst, 1e-10);
  }
}

TEST(FiniteRecursions, TwoControllerModesTrackCoupledSequences) {
  std::mt19937_64 rng(233);
  const Eigen::MatrixXd a = test::random_with_radius(rng, 2, 1.3);
  const Eigen::MatrixXd b10 = test::random_matrix(rng, 2, 1);
  const Eigen::MatrixXd b11 = test::random_matrix(rng, 2, 1);
  const Eigen::MatrixXd q = test::random_psd(rng, 2, 0.1);
  const Eigen::MatrixXd r = test::random_pd(rng, 2);
  const double p1 = 0.3;

  const int horizon = 9;
  const MjlsRecursions rec =
      mjls_finite_recursions(build_auxiliary_2c(a, b10, b11, q, r, p1), horizon);
  const FiniteSolution sol =
      finite_horizon_solve(two_controller_spec(a, b10, b11, q, r, p1), horizon);
  for (int t = 0; t <= horizon + 1; ++t) {
    EXPECT_LT((rec.p[t][0] - sol.p0[t]).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((rec.p[t][1] - sol.pn[t][0]).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(FiniteRecursions, SingleModeIsPlainRiccati) {
  std::mt19937_64 rng(239);
  MjlsModel model;
  model.a = {test::random_matrix(rng, 2, 2)};
  model.b = {test::random_matrix(rng, 2, 1)};
  model.q = {test::random_psd(rng, 2)};
  model.r = {test::random_pd(rng, 1)};
  model.theta = Eigen::MatrixXd::Ones(1, 1);
  model.validate();

  const int horizon = 6;
  const MjlsRecursions rec = mjls_finite_recursions(model, horizon);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 2);
  for (int t = horizon + 1; t >= 0; --t) {
    EXPECT_LT((rec.p[t][0] - p).cwiseAbs().maxCoeff(), 1e-10);
    p = test::centralized_riccati_step(p, model.q[0], model.r[0], model.a[0],
                                       model.b[0]);
  }
}

TEST(Dcare, AuxiliaryOfFeasibleSensorConverges) {
  const DncsSpec spec = scalar_sensor_spec(0.2);
  const DcareSolution dcare = dcare_solve(build_auxiliary_nc(spec));
  ASSERT_EQ(dcare.status, SolveStatus::kConverged);
  const SteadySolution steady = steady_solve(spec);
  ASSERT_TRUE(steady.converged());
  EXPECT_LT((dcare.p[0] - steady.p0).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_LT((dcare.p[1] - steady.pn[0]).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Dcare, EmbeddedLocalFixedPointsOnMultipleSubsystems) {
  std::mt19937_64 rng(241);
  const DncsSpec spec = test::random_feasible_spec(rng);
  const DcareSolution dcare = dcare_solve(build_auxiliary_nc(spec));
  const SteadySolution steady = steady_solve(spec);
  ASSERT_EQ(dcare.converged(), steady.converged());
  if (!steady.converged()) return;

  const BlockMatrix shape =
      BlockMatrix::Zero(spec.state_partition(), spec.state_partition());
  EXPECT_LT((dcare.p[0] - steady.p0).cwiseAbs().maxCoeff(), 1e-6);
  for (int n = 0; n < spec.subsystems(); ++n) {
    const Eigen::MatrixXd embedded = l_zero(shape, steady.pn[n], n, n).data();
    EXPECT_LT((dcare.p[n + 1] - embedded).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Dcare, InfeasibleSensorDoesNotConverge) {
  const DcareSolution dcare =
      dcare_solve(build_auxiliary_nc(scalar_sensor_spec(0.3)));
  EXPECT_FALSE(dcare.converged());
}

TEST(Dcare, IdentityThetaDecouplesIntoPlainAres) {
  std::mt19937_64 rng(251);
  MjlsModel model;
  for (int m = 0; m < 2; ++m) {
    model.a.push_back(test::random_with_radius(rng, 2, 0.7));
    model.b.push_back(test::random_matrix(rng, 2, 1));
    model.q.push_back(test::random_psd(rng, 2, 0.2));
    model.r.push_back(test::random_pd(rng, 1));
  }
  model.theta = Eigen::MatrixXd::Identity(2, 2);
  model.validate();

  const DcareSolution dcare = dcare_solve(model);
  ASSERT_TRUE(dcare.converged());
  for (int m = 0; m < 2; ++m) {
    Eigen::MatrixXd oracle;
    ASSERT_TRUE(test::centralized_are(model.a[m], model.b[m], model.q[m],
                                      model.r[m], &oracle));
    EXPECT_LT((dcare.p[m] - oracle).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(SecondMoment, MatchesExplicitTriangularForm) {
  std::mt19937_64 rng(257);
  const double p = 0.4;
  const Eigen::MatrixXd m0 = test::random_matrix(rng, 2, 2);
  const Eigen::MatrixXd m1 = test::random_matrix(rng, 2, 2);
  Eigen::MatrixXd theta(2, 2);
  theta << 1.0, 0.0, 1.0 - p, p;

  const Eigen::MatrixXd big = second_moment_matrix(theta, {m0, m1});
  ASSERT_EQ(big.rows(), 8);
  Eigen::MatrixXd expected(8, 8);
  expected << kron(m0, m0), (1.0 - p) * kron(m1, m1),
      Eigen::MatrixXd::Zero(4, 4), p * kron(m1, m1);
  EXPECT_LT((big - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SecondMoment, RejectsOversizedAssembly) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(13, 13);
  EXPECT_THROW(second_moment_matrix(Eigen::MatrixXd::Ones(1, 1), {m}),
               std::invalid_argument);
  std::vector<Eigen::MatrixXd> many(10, Eigen::MatrixXd::Identity(2, 2));
  Eigen::MatrixXd theta = Eigen::MatrixXd::Identity(10, 10);
  EXPECT_THROW(second_moment_matrix(theta, many), std::invalid_argument);
}

TEST(SsTest, TrivialAndScalarCases) {
  MjlsModel model = two_mode_toy(0.5, 0.0, 0.0);
  const std::vector<Eigen::MatrixXd> zero_gains{scalar(0), scalar(0)};
  const StabilityReport zero = ss_test(model, zero_gains);
  EXPECT_TRUE(zero.schur_stable);
  EXPECT_EQ(zero.rho, 0.0);
  EXPECT_EQ(zero.matrix_dim, 2);

  MjlsModel single;
  single.a = {scalar(2.0)};
  single.b = {scalar(0.0)};
  single.q = {scalar(1.0)};
  single.r = {scalar(1.0)};
  single.theta = Eigen::MatrixXd::Ones(1, 1);
  const StabilityReport unstable = ss_test(single, {scalar(0)});
  EXPECT_FALSE(unstable.schur_stable);
  EXPECT_NEAR(unstable.rho, 4.0, 1e-12);
}

TEST(SdTest, NilpotentModesAreStableWithoutInjection) {
  MjlsModel model;
  Eigen::MatrixXd nil(2, 2);
  nil << 0, 1, 0, 0;
  model.a = {nil, nil};
  model.b = {Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(2, 1)};
  model.q = {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)};
  model.r = {Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1)};
  model.theta = Eigen::MatrixXd(2, 2);
  model.theta << 1.0, 0.0, 0.5, 0.5;
  model.validate();

  const std::vector<Eigen::MatrixXd> zero_h{Eigen::MatrixXd::Zero(2, 2),
                                            Eigen::MatrixXd::Zero(2, 2)};
  const StabilityReport report = sd_test(model, zero_h);
  EXPECT_TRUE(report.schur_stable);
  EXPECT_NEAR(report.rho, 0.0, 1e-12);
}

TEST(SdTest, SearchedInjectionsStabilizeDetectableModel) {
  const MjlsModel model = build_auxiliary_nc(scalar_sensor_spec(0.2));
  const std::vector<Eigen::MatrixXd> injections = injection_search(model);
  const StabilityReport report = sd_test(model, injections);
  EXPECT_TRUE(report.schur_stable);
}

TEST(SdTest, VerdictIsConjunctionOfDiagonalBlocks) {
  const MjlsModel model = build_auxiliary_nc(scalar_sensor_spec(0.2));
  // Mode 0 stabilized, mode 1 left at A = 2: block radii {something < 1, 0.8}.
  const std::vector<Eigen::MatrixXd> good{scalar(-1.8), scalar(-1.8)};
  EXPECT_TRUE(sd_test(model, good).schur_stable);
  // Mode 0 left unstable: rho(A_d(0))^2 = 4 dominates.
  const std::vector<Eigen::MatrixXd> bad{scalar(0.0), scalar(-1.8)};
  const StabilityReport mixed = sd_test(model, bad);
  EXPECT_FALSE(mixed.schur_stable);
  EXPECT_NEAR(mixed.rho, 4.0, 1e-12);
}

TEST(Shortcut, MatchesFullAssemblyOnRandomModels) {
  std::mt19937_64 rng(263);
  for (int trial = 0; trial < 12; ++trial) {
    const DncsSpec spec = test::random_feasible_spec(rng);
    const MjlsModel model = build_auxiliary_nc(spec);
    const DcareSolution dcare = dcare_solve(model);
    if (!dcare.converged()) continue;
    std::vector<Eigen::MatrixXd> closed(model.modes());
    for (int m = 0; m < model.modes(); ++m) {
      closed[m] = model.a[m] + model.b[m] * dcare.k[m];
    }
    const ShortcutReport fast = triangular_shortcut(model, closed);
    const StabilityReport full = ss_test(model, dcare.k);
    EXPECT_EQ(fast.schur_stable, full.schur_stable);
    double max_block = 0.0;
    for (double r : fast.block_radii) max_block = std::max(max_block, r);
    EXPECT_NEAR(full.rho, max_block, 1e-8 * (1.0 + max_block));
  }
}

TEST(Shortcut, ScalarSensorClosedForm) {
  const DncsSpec spec = scalar_sensor_spec(0.1);
  const SteadySolution steady = steady_solve(spec);
  ASSERT_TRUE(steady.converged());
  const MjlsModel model = build_auxiliary_nc(spec);
  std::vector<Eigen::MatrixXd> closed(2);
  closed[0] = model.a[0] + model.b[0] * steady.k0;
  // Mode 1 has no usable input column for the sensor system, so its closed
  // loop is just A.
  closed[1] = model.a[1];
  const ShortcutReport report = triangular_shortcut(model, closed);
  ASSERT_EQ(report.block_radii.size(), 2u);
  const double a_cl = 2.0 + steady.k0(0, 0);
  EXPECT_NEAR(report.block_radii[0], a_cl * a_cl, 1e-10);
  EXPECT_NEAR(report.block_radii[1], 0.1 * 4.0, 1e-12);
  EXPECT_TRUE(report.schur_stable);
}

TEST(Shortcut, ZeroDropProbabilityZeroesItsBlock) {
  DncsSpec spec = scalar_sensor_spec(0.0);
  const MjlsModel model = build_auxiliary_nc(spec);
  const std::vector<Eigen::MatrixXd> closed{scalar(0.5), scalar(2.0)};
  const ShortcutReport report = triangular_shortcut(model, closed);
  EXPECT_EQ(report.block_radii[1], 0.0);
}

TEST(Shortcut, RejectsUnrecognizedTheta) {
  MjlsModel model = two_mode_toy(0.4, 0.5, 0.5);
  model.theta << 0.5, 0.5, 0.5, 0.5;  // mode 0 no longer absorbing
  const std::vector<Eigen::MatrixXd> closed{scalar(0.5), scalar(0.5)};
  EXPECT_THROW(triangular_shortcut(model, closed), std::invalid_argument);
}

}  // namespace
}  // namespace dncs
