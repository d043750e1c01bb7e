#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dncs/coupled_riccati.hpp"
#include "dncs/system_spec.hpp"

namespace dncs {

/**
 * splitmix64: a counter-based 64-bit generator. The state advances by the
 * golden-ratio increment and each output is a bijective finalizer hash of the
 * counter, so the stream is fully determined by its starting counter and is
 * portable across platforms (unlike the distributions in <random>, which the
 * standard leaves algorithm-unspecified).
 */
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  // Finalizer hash alone; used to derive substream seeds.
  static std::uint64_t mix(std::uint64_t z);

  double uniform01();         // (0, 1], 53-bit resolution
  double standard_normal();   // Box-Muller, second variate cached
  double rademacher();        // +-1 from the top bit

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Substream for one Monte Carlo run: counter seeded with
// mix(seed + (run_index + 1) * golden_gamma). Streams for distinct runs are
// disjoint with overwhelming probability.
SplitMix64 run_stream(std::uint64_t seed, std::int64_t run_index);

enum class NoiseKind {
  kStandardNormal,
  kRademacher,  // unit variance, +-1; the model only fixes cov(W) = I
  kZero,        // diagnostic runs
};

const char* to_string(NoiseKind kind);

struct SimConfig {
  DncsSpec spec;
  SteadySolution solution;
  int horizon = 5000;
  int num_runs = 200;
  std::uint64_t seed = 0;
  NoiseKind noise = NoiseKind::kStandardNormal;
  int record_every = 1;  // CSV row stride; 0 disables tracing
};

struct SimState {
  Eigen::VectorXd x;
  Eigen::VectorXd x_hat;
  std::vector<Eigen::MatrixXd> sigma;  // per-subsystem cov(X^n | H^0)
  long t = 0;
  double accumulated_cost = 0.0;
};

/**
 * Closed loop under fixed gains: actions, plant update, and the
 * common-information estimator driven by the link outcomes.
 */
class ClosedLoop {
 public:
  ClosedLoop(const DncsSpec& spec, const Eigen::MatrixXd& k0,
             const std::vector<Eigen::MatrixXd>& kn);

  // x = 0, x_hat = 0, sigma = 0 per the model's zero initial state.
  SimState initial_state() const;

  // U = K^0 x_hat + blockdiag(0; K^1..K^N) (x - x_hat); the remote block of U
  // depends on x_hat only.
  Eigen::VectorXd control(const SimState& state) const;

  /**
   * Advances one step and returns the stage cost x'Qx + U'RU it accrued.
   * link_success[n] is the outcome of uplink n for the *new* packet: on
   * success the estimator adopts the true subsystem state and Sigma^n resets
   * to zero; on drop it propagates through A + B K^0 and
   * Sigma^n <- I + A_s(n) Sigma^n A_s(n)'. Throws on non-finite states.
   */
  double step(SimState& state, const std::vector<std::uint8_t>& link_success,
              const Eigen::VectorXd& noise) const;

  const DncsSpec& spec() const { return spec_; }
  const Eigen::MatrixXd& a() const { return a_; }
  const Eigen::MatrixXd& b() const { return b_; }
  // A + B K^0, the estimate propagator on drops.
  const Eigen::MatrixXd& a_closed_remote() const { return drop_propagator_; }
  // A^nn + B^nn K^n, the per-subsystem error propagator.
  const Eigen::MatrixXd& a_closed_local(int n) const { return a_s_[n]; }

 private:
  DncsSpec spec_;
  Eigen::MatrixXd a_, b_, k0_;
  std::vector<Eigen::MatrixXd> kn_;
  Eigen::MatrixXd drop_propagator_;
  std::vector<Eigen::MatrixXd> a_s_;
  std::vector<Eigen::Index> state_offsets_;
  std::vector<Eigen::Index> local_input_offsets_;
};

struct SimReport {
  double mean_avg_cost = 0.0;
  double std_error = 0.0;            // from independent run averages
  double predicted_avg_cost = 0.0;   // tr(Lambda*)
  double max_mean_sq_state = 0.0;    // max_t of mean over runs of ||X_t||^2
  double max_mean_sq_error = 0.0;    // same for ||X_t - X_hat_t||^2
  std::vector<double> mean_sq_state;   // per step, t = 1..horizon
  std::vector<double> mean_sq_error;
  std::vector<double> run_avg_cost;
  std::vector<int> aborted_runs;     // blow-up guard hits (||x||_inf > 1e9)
  int horizon = 0;
  int num_runs = 0;
  std::uint64_t seed = 0;
  std::string noise;
  std::string generator = "splitmix64";
};

/**
 * num_runs independent trajectories under the steady-state strategies.
 * Refuses a non-converged solution. Bit-deterministic given config.seed: runs
 * use disjoint substreams and aggregation is order-independent (pairwise
 * summation). When trace is non-null and record_every >= 1, writes CSV rows
 * (header: t,run,x_<i>...,xhat_<i>...,gamma_<n>...,u_<j>...,cost) every
 * record_every steps; gamma_<n> is the outcome of the packet sent at t+1.
 */
SimReport run_monte_carlo(const SimConfig& config, std::ostream* trace = nullptr);

struct IdentityCheck {
  double lhs = 0.0;       // E[c | H^0] + E[V_{t+1} | H^0]
  double rhs = 0.0;       // tr(Lambda*) + V_t
  double residual = 0.0;  // |lhs - rhs|
  bool pass = false;      // residual <= tol * (1 + |rhs|)
};

/**
 * Evaluates both sides of the telescoping value identity in closed form at an
 * arbitrary estimator state (x_hat, Sigma^1..Sigma^N). The identity is exact
 * algebra at the fixed point, so the residual is floating-point noise.
 */
IdentityCheck verify_step_identity(const DncsSpec& spec,
                                   const SteadySolution& solution,
                                   const Eigen::VectorXd& x_hat,
                                   const std::vector<Eigen::MatrixXd>& sigma,
                                   double tol = 1e-8);

struct FiniteCostCheck {
  double dp_cost = 0.0;  // J*_T from the backward recursion
  double mc_cost = 0.0;  // Monte Carlo mean of the realized total cost
  double std_error = 0.0;
  double z_score = 0.0;  // (mc - dp) / std_error, 0 when both sides agree exactly
};

// Simulates the time-varying finite-horizon strategies and compares the
// realized total cost against the recursion value.
FiniteCostCheck finite_horizon_cost_check(
    const DncsSpec& spec, int horizon, int num_runs, std::uint64_t seed,
    NoiseKind noise = NoiseKind::kStandardNormal);

}  // namespace dncs
