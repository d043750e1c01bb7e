#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dncs/solver_status.hpp"
#include "dncs/system_spec.hpp"

namespace dncs {

/**
 * Backward solution of the coupled finite-horizon recursions
 *   P_t^0 = omega(P_{t+1}^0, Q, R, A, B)
 *   P_t^n = omega((1-p^n) [P_{t+1}^0]_{n,n} + p^n P_{t+1}^n,
 *                 Q^nn, R^nn, A^nn, B^nn)
 * from P_{T+1} = 0, with gains from psi on the same arguments and
 *   cost = sum_t sum_n tr((1-p^n) [P_{t+1}^0]_{n,n} + p^n P_{t+1}^n).
 *
 * p0[t] and pn[t][n] run t = 0..T+1; k0[t] and kn[t][n] run t = 0..T.
 */
struct FiniteSolution {
  int horizon = 0;
  std::vector<Eigen::MatrixXd> p0;
  std::vector<std::vector<Eigen::MatrixXd>> pn;
  std::vector<Eigen::MatrixXd> k0;
  std::vector<std::vector<Eigen::MatrixXd>> kn;
  double cost = 0.0;
};

FiniteSolution finite_horizon_solve(const DncsSpec& spec, int horizon);

/**
 * Fixed point of the same recursions, found by value iteration from zero
 * (warm starts would void the monotone-convergence guarantee). Gains, the
 * mixture Lambda* = blockdiag_n((1-p^n)[P*^0]_{n,n} + p^n P*^n) and the
 * optimal average cost tr(Lambda*) are filled only when converged.
 *
 * Non-convergence is a reported status, never an error: divergence (a trace
 * crossing divergence_cap) is exactly the infeasibility verdict for
 * p >= p_c, and the iteration budget is a distinct outcome.
 */
struct SteadySolution {
  Eigen::MatrixXd p0;
  std::vector<Eigen::MatrixXd> pn;
  Eigen::MatrixXd k0;
  std::vector<Eigen::MatrixXd> kn;
  Eigen::MatrixXd lambda;
  double avg_cost = 0.0;
  SolveStatus status = SolveStatus::kIterationLimit;
  int iterations = 0;
  std::vector<std::string> warnings;  // standing-assumption checks

  bool converged() const { return status == SolveStatus::kConverged; }
};

SteadySolution steady_solve(const DncsSpec& spec, double tol = 1e-10,
                            int max_iter = 100000,
                            double divergence_cap = 1e12);

/**
 * Two-controller fixed point, written out directly from the single-plant
 * coupled equations
 *   P^0 = omega(P^0, Q, R, A, [B10 B11])
 *   P^1 = omega((1-p1) P^0 + p1 P^1, Q, R^11, A, B11)
 * (full Q and full A in the P^1 update; with one subsystem these coincide
 * with the blockwise recursions, which is what the equality test checks).
 * R covers both inputs, remote block first.
 */
SteadySolution two_controller_solve(const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& b10,
                                    const Eigen::MatrixXd& b11,
                                    const Eigen::MatrixXd& q,
                                    const Eigen::MatrixXd& r, double p1,
                                    double tol = 1e-10, int max_iter = 100000,
                                    double divergence_cap = 1e12);

/**
 * Equal-dimension form of the finite-horizon recursions: every matrix is
 * lifted to full state dimension with l_zero / l_iden,
 *   bar_P_t^n = omega((1-p^n) bar_P_{t+1}^0 + p^n bar_P_{t+1}^n,
 *               l_zero(Q, Q^nn, n, n), l_iden(R, R^nn, n+1),
 *               l_zero(A, A^nn, n, n), l_zero(B, B^nn, n, n+1)).
 * Satisfies bar_P_t^0 = P_t^0 and bar_P_t^n = l_zero(P^0-shape, P_t^n, n, n).
 */
struct BarRepresentation {
  int horizon = 0;
  std::vector<Eigen::MatrixXd> p0;                // t = 0..T+1
  std::vector<std::vector<Eigen::MatrixXd>> pn;   // full state dimension
};

BarRepresentation bar_representation(const DncsSpec& spec, int horizon);

}  // namespace dncs
