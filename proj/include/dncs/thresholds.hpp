#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "dncs/system_spec.hpp"

namespace dncs {

/**
 * Eigenvalues of A failing the PBH rank test rank([A - lambda*I | B]) = dim A,
 * reported with algebraic multiplicity. Rank is decided by SVD with threshold
 * rank_tol * sigma_max; computed eigenvalues within 1e-7 of each other are
 * clustered and tested once at the cluster mean.
 */
std::vector<std::complex<double>> uncontrollable_modes(
    const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rank_tol = 1e-8);

// max |lambda| over uncontrollable_modes(a, b); 0 when the pair is reachable
// (the closed-loop radius can then be made arbitrarily small).
double min_achievable_radius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             double rank_tol = 1e-8);

// No uncontrollable mode with |lambda| >= 1.
bool is_stabilizable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     double rank_tol = 1e-8);

// Dual test: (A, C) detectable iff (A', C') is stabilizable.
bool is_detectable(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c,
                   double rank_tol = 1e-8);

/**
 * Critical drop probabilities and standing-assumption flags.
 *
 * p_s^n = 1/r^2 with r the largest unreachable mode of (A^nn, B^nn);
 * p_d^n = 1/r_d^2 with r_d the largest undetectable mode of (A^nn, (Q^nn)^{1/2});
 * p_c^n = p_s^n while every local pair (A^nn, (Q^nn)^{1/2}) is detectable,
 * otherwise min(p_s^n, p_d^n). All three are +infinity when the defining mode
 * set is empty. Values may exceed 1; p_c_effective clamps at 1.
 */
struct ThresholdReport {
  std::vector<double> p_s;
  std::vector<double> p_d;
  std::vector<double> p_c;
  std::vector<double> p_c_effective;  // min(p_c, 1)
  std::vector<std::vector<std::complex<double>>> uncontrollable;  // (A^nn,B^nn)
  bool q_detectable = false;    // (A, Q^{1/2})
  bool b_stabilizable = false;  // (A, B)
  std::vector<bool> local_q_detectable;  // (A^nn, (Q^nn)^{1/2})

  bool assumption3() const;
};

ThresholdReport critical_probs(const DncsSpec& spec, double rank_tol = 1e-8);

// Feasible iff p^n < p_c^n strictly for every n; binding lists the 0-based
// subsystems with p^n >= p_c^n (the boundary itself is infeasible).
struct FeasibilityVerdict {
  bool feasible = false;
  std::vector<int> binding;
};

FeasibilityVerdict feasibility_verdict(const DncsSpec& spec,
                                       double rank_tol = 1e-8);

}  // namespace dncs
