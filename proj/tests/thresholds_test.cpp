#include "dncs/thresholds.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "dncs/coupled_riccati.hpp"
#include "test_support.hpp"

namespace dncs {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

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

TEST(UncontrollableModes, HandCases) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 3.0;
  Eigen::MatrixXd b(2, 1);
  b << 1.0, 0.0;
  const auto modes = uncontrollable_modes(a, b);
  ASSERT_EQ(modes.size(), 1u);
  EXPECT_NEAR(modes[0].real(), 3.0, 1e-9);
  EXPECT_NEAR(modes[0].imag(), 0.0, 1e-9);

  // Controllable companion pair: no failures.
  Eigen::MatrixXd comp(2, 2);
  comp << 0, 1, -0.5, 1.2;
  Eigen::MatrixXd unit(2, 1);
  unit << 0, 1;
  EXPECT_TRUE(uncontrollable_modes(comp, unit).empty());

  // No input at all: every eigenvalue fails, with multiplicity.
  const auto all = uncontrollable_modes(a, Eigen::MatrixXd::Zero(2, 1));
  EXPECT_EQ(all.size(), 2u);
}

TEST(UncontrollableModes, RepeatedEigenvaluesKeepMultiplicity) {
  // Jordan-type block with a repeated eigenvalue 2 and no input: the
  // clustered PBH test must report it twice.
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 0, 2;
  const auto modes = uncontrollable_modes(a, Eigen::MatrixXd::Zero(2, 1));
  ASSERT_EQ(modes.size(), 2u);
  EXPECT_NEAR(modes[0].real(), 2.0, 1e-6);
  EXPECT_NEAR(modes[1].real(), 2.0, 1e-6);
}

TEST(UncontrollableModes, ComplexPairReported) {
  // Rotation scaled by 1.5 with no input: the conjugate pair appears whole.
  Eigen::MatrixXd a(2, 2);
  a << 0, 1.5, -1.5, 0;
  const auto modes = uncontrollable_modes(a, Eigen::MatrixXd::Zero(2, 1));
  ASSERT_EQ(modes.size(), 2u);
  EXPECT_NEAR(std::abs(modes[0]), 1.5, 1e-9);
  EXPECT_NEAR(std::abs(modes[1]), 1.5, 1e-9);
}

TEST(MinAchievableRadius, HandCases) {
  EXPECT_NEAR(min_achievable_radius(scalar(2.0), scalar(0.0)), 2.0, 1e-12);
  EXPECT_EQ(min_achievable_radius(scalar(2.0), scalar(1.0)), 0.0);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 0.5;
  a(1, 1) = 3.0;
  Eigen::MatrixXd b(2, 1);
  b << 1.0, 0.0;
  EXPECT_NEAR(min_achievable_radius(a, b), 3.0, 1e-9);
}

TEST(Stabilizability, ThresholdAtUnitCircle) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 0.9;   // stable uncontrollable mode is fine
  a(1, 1) = 1.1;
  Eigen::MatrixXd b(2, 1);
  b << 0.0, 1.0;
  EXPECT_TRUE(is_stabilizable(a, b));
  b << 1.0, 0.0;  // now the unstable mode is the unreachable one
  EXPECT_FALSE(is_stabilizable(a, b));
}

TEST(Detectability, DualOfStabilizability) {
  std::mt19937_64 rng(307);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd a = test::random_matrix(rng, 3, 3);
    const Eigen::MatrixXd c = test::random_matrix(rng, 2, 3);
    EXPECT_EQ(is_detectable(a, c),
              is_stabilizable(a.transpose(), c.transpose()));
  }
}

TEST(DualSymmetry, DualThresholdMatchesExplicitDualPair) {
  std::mt19937_64 rng(311);
  for (int trial = 0; trial < 20; ++trial) {
    DncsSpec spec = test::random_spec(rng);
    const ThresholdReport report = critical_probs(spec);
    for (int n = 0; n < spec.subsystems(); ++n) {
      const Eigen::MatrixXd root = sqrt_psd(spec.q_sub(n));
      const double r_dual = min_achievable_radius(
          spec.a_blocks[n].transpose(), root.transpose());
      const double expected = r_dual == 0.0 ? kInf : 1.0 / (r_dual * r_dual);
      if (std::isinf(expected)) {
        EXPECT_EQ(report.p_d[n], kInf);
      } else {
        EXPECT_EQ(report.p_d[n], expected);
      }
    }
  }
}

TEST(ScalingInvariance, InputScalingDoesNotChangeModes) {
  std::mt19937_64 rng(313);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
    a(0, 0) = 1.5;
    a(1, 1) = 0.3;
    a(2, 2) = 2.5;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 1);
    b(1, 0) = 1.0;
    b(2, 0) = 1.0;
    const auto base = uncontrollable_modes(a, b);
    for (double s : {1e-4, 0.1, 10.0, 1e4}) {
      const auto scaled = uncontrollable_modes(a, s * b);
      ASSERT_EQ(scaled.size(), base.size());
      for (size_t i = 0; i < base.size(); ++i) {
        EXPECT_NEAR(std::abs(scaled[i] - base[i]), 0.0, 1e-7);
      }
    }
  }
}

TEST(CriticalProbs, ScalarSensor) {
  const ThresholdReport report = critical_probs(scalar_sensor_spec(0.1));
  ASSERT_EQ(report.p_c.size(), 1u);
  EXPECT_NEAR(report.p_c[0], 0.25, 1e-12);
  EXPECT_NEAR(report.p_s[0], 0.25, 1e-12);
  EXPECT_EQ(report.p_d[0], kInf);  // Q = 1 makes the pair detectable
  EXPECT_NEAR(report.p_c_effective[0], 0.25, 1e-12);
  EXPECT_TRUE(report.q_detectable);
  EXPECT_TRUE(report.b_stabilizable);
  ASSERT_EQ(report.local_q_detectable.size(), 1u);
  EXPECT_TRUE(report.local_q_detectable[0]);
  EXPECT_TRUE(report.assumption3());
}

TEST(CriticalProbs, ReachablePairIsUnconstrained) {
  DncsSpec spec = scalar_sensor_spec(0.9);
  spec.b_local[0] = scalar(1.0);
  spec.validate();
  const ThresholdReport report = critical_probs(spec);
  EXPECT_EQ(report.p_c[0], kInf);
  EXPECT_EQ(report.p_c_effective[0], 1.0);
  EXPECT_TRUE(report.uncontrollable[0].empty());
}

TEST(CriticalProbs, PartiallyReachableDiagonalPlant) {
  DncsSpec spec;
  spec.state_dims = {2};
  spec.remote_input_dim = 1;
  spec.local_input_dims = {1};
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 3.0;
  Eigen::MatrixXd b(2, 1);
  b << 1.0, 0.0;
  spec.a_blocks = {a};
  spec.b_local = {b};
  spec.b_remote = {Eigen::MatrixXd::Identity(2, 2).leftCols(1)};
  spec.q = Eigen::MatrixXd::Identity(2, 2);
  spec.r = Eigen::MatrixXd::Identity(2, 2);
  spec.drop_probs = {0.05};
  spec.validate();

  const ThresholdReport report = critical_probs(spec);
  EXPECT_NEAR(report.p_s[0], 1.0 / 9.0, 1e-12);
  EXPECT_EQ(report.p_d[0], kInf);
  EXPECT_NEAR(report.p_c[0], 1.0 / 9.0, 1e-12);
}

TEST(CriticalProbs, UndetectableLocalCostUsesDualThreshold) {
  // Q = 0 kills detectability of (A, Q^{1/2}); p_c falls back to
  // min(p_s, p_d) and assumption 3 is flagged.
  DncsSpec spec = scalar_sensor_spec(0.1);
  spec.q = scalar(0.0);
  spec.validate();
  const ThresholdReport report = critical_probs(spec);
  EXPECT_FALSE(report.local_q_detectable[0]);
  EXPECT_FALSE(report.assumption3());
  EXPECT_NEAR(report.p_d[0], 0.25, 1e-12);
  EXPECT_NEAR(report.p_c[0], 0.25, 1e-12);
}

TEST(Feasibility, StrictInequalityAtThreshold) {
  EXPECT_TRUE(feasibility_verdict(scalar_sensor_spec(0.2)).feasible);

  const FeasibilityVerdict boundary =
      feasibility_verdict(scalar_sensor_spec(0.25));
  EXPECT_FALSE(boundary.feasible);
  ASSERT_EQ(boundary.binding.size(), 1u);
  EXPECT_EQ(boundary.binding[0], 0);

  DncsSpec reachable = scalar_sensor_spec(1.0);
  reachable.b_local[0] = scalar(1.0);
  reachable.validate();
  EXPECT_TRUE(feasibility_verdict(reachable).feasible);
}

TEST(Feasibility, AgreesWithSolverConvergence) {
  std::mt19937_64 rng(317);
  int tested = 0;
  for (int trial = 0; trial < 60 && tested < 12; ++trial) {
    DncsSpec spec = test::random_sensor_spec(rng);
    const ThresholdReport th = critical_probs(spec);
    double p_min = kInf;
    for (double pc : th.p_c) p_min = std::min(p_min, pc);
    if (!(p_min < 1.0 / 1.1)) continue;
    ++tested;

    for (double& p : spec.drop_probs) p = 0.9 * p_min;
    EXPECT_TRUE(feasibility_verdict(spec).feasible);
    EXPECT_TRUE(steady_solve(spec).converged());

    for (double& p : spec.drop_probs) p = 1.1 * p_min;
    EXPECT_FALSE(feasibility_verdict(spec).feasible);
    EXPECT_FALSE(steady_solve(spec).converged());
  }
  EXPECT_GE(tested, 8);
}

}  // namespace
}  // namespace dncs
