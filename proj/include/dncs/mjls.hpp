#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dncs/solver_status.hpp"
#include "dncs/system_spec.hpp"

namespace dncs {

/**
 * Markov jump linear system X_{t+1} = A(M_t) X_t + B(M_t) U_t with mode
 * process M_t driven by the row-stochastic transition matrix theta and
 * per-mode stage cost (Q(m), R(m)). Used purely as an analysis device; the
 * initial mode distribution is irrelevant to everything computed here.
 */
struct MjlsModel {
  std::vector<Eigen::MatrixXd> a;
  std::vector<Eigen::MatrixXd> b;
  std::vector<Eigen::MatrixXd> q;
  std::vector<Eigen::MatrixXd> r;
  Eigen::MatrixXd theta;

  int modes() const { return static_cast<int>(a.size()); }
  // Uniform per-mode shapes; theta rows sum to 1 within 1e-12, entries >= 0.
  void validate() const;
};

/**
 * Two-mode auxiliary model whose coupled Riccati recursions reproduce the
 * two-controller ones: mode 0 is the full plant, mode 1 disables the remote
 * input column and replaces its cost block by identity;
 * theta = [[1, 0], [1-p1, p1]].
 */
MjlsModel build_auxiliary_2c(const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& b10,
                             const Eigen::MatrixXd& b11,
                             const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                             double p1);

/**
 * (N+1)-mode auxiliary model for the N-subsystem plant: mode 0 carries the
 * full (A, B, Q, R); mode n keeps only subsystem n alive via l_zero / l_iden
 * lifts. theta row 0 is absorbing; row n puts 1-p^n on mode 0 and p^n on
 * itself.
 */
MjlsModel build_auxiliary_nc(const DncsSpec& spec);

// Mode-coupled value recursions from P_{T+1}(m) = 0:
//   P_t(m) = omega(sum_k theta(m,k) P_{t+1}(k), Q(m), R(m), A(m), B(m)).
// p[t][m] runs t = 0..T+1; k[t][m] runs t = 0..T.
struct MjlsRecursions {
  int horizon = 0;
  std::vector<std::vector<Eigen::MatrixXd>> p;
  std::vector<std::vector<Eigen::MatrixXd>> k;
};

MjlsRecursions mjls_finite_recursions(const MjlsModel& model, int horizon);

// Value iteration for the coupled algebraic fixed point, same
// convergence/divergence contract as steady_solve.
struct DcareSolution {
  std::vector<Eigen::MatrixXd> p;
  std::vector<Eigen::MatrixXd> k;
  SolveStatus status = SolveStatus::kIterationLimit;
  int iterations = 0;

  bool converged() const { return status == SolveStatus::kConverged; }
};

DcareSolution dcare_solve(const MjlsModel& model, double tol = 1e-10,
                          int max_iter = 100000, double divergence_cap = 1e12);

/**
 * vec-ed second-moment propagator of the mode-conditioned covariances:
 * block (j, i) = theta(i, j) * (M(i) x M(i)), so that stacked
 * vec(V_{t+1}) = matrix * vec(V_t). Schur stability of this matrix is the
 * mean-square stability test.
 */
Eigen::MatrixXd second_moment_matrix(const Eigen::MatrixXd& theta,
                                     const std::vector<Eigen::MatrixXd>& m);

struct StabilityReport {
  bool schur_stable = false;
  double rho = 0.0;
  Eigen::Index matrix_dim = 0;
};

// Stochastic stabilizability: closed loop A(m) + B(m) K(m).
StabilityReport ss_test(const MjlsModel& model,
                        const std::vector<Eigen::MatrixXd>& gains);

// Stochastic detectability: injected loop A(m) + H(m) Q(m)^{1/2}.
StabilityReport sd_test(const MjlsModel& model,
                        const std::vector<Eigen::MatrixXd>& injections);

/**
 * For the auxiliary theta pattern (mode 0 absorbing, mode n self-loop p^n)
 * the propagator is block upper-triangular, so its spectral radius is the max
 * of the diagonal-block radii. Returns
 *   {rho(M(0))^2, p^1 rho(M(1))^2, .., p^N rho(M(N))^2}
 * without forming any Kronecker product; verdict = all entries < 1.
 */
struct ShortcutReport {
  std::vector<double> block_radii;
  bool schur_stable = false;
};

ShortcutReport triangular_shortcut(const MjlsModel& model,
                                   const std::vector<Eigen::MatrixXd>& closed_loop);

/**
 * Coarse random-restart, gradient-free search for per-mode injections H(m)
 * lowering rho(A(m) + H(m) Q(m)^{1/2}); succeeds on detectable pairs of
 * desk-scale dimension. Deterministic given seed.
 */
std::vector<Eigen::MatrixXd> injection_search(const MjlsModel& model,
                                              int restarts = 40,
                                              std::uint64_t seed = 12345);

}  // namespace dncs
