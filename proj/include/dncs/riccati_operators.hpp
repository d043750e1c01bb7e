#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dncs/block_matrix.hpp"

namespace dncs {

/**
 * One-step Riccati value update
 *   omega(P,Q,R,A,B) = Q + A'PA - A'PB (R + B'PB)^{-1} B'PA,
 * the minimum over gains K of phi(P,K,Q,R,A,B). Result is symmetrized.
 *
 * Throws std::runtime_error when R + B'PB is singular below the 1e-12
 * conditioning tolerance; no regularization is applied since that always
 * indicates an ill-posed cost rather than a numerical accident.
 */
Eigen::MatrixXd omega(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q,
                      const Eigen::MatrixXd& r, const Eigen::MatrixXd& a,
                      const Eigen::MatrixXd& b);

// Minimizing feedback gain psi(P,R,A,B) = -(R + B'PB)^{-1} B'PA.
Eigen::MatrixXd psi(const Eigen::MatrixXd& p, const Eigen::MatrixXd& r,
                    const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Fixed-gain value update phi(P,K,Q,R,A,B) = Q + K'RK + (A+BK)'P(A+BK),
// symmetrized. phi(P, psi(P,R,A,B), Q,R,A,B) == omega(P,Q,R,A,B).
Eigen::MatrixXd phi(const Eigen::MatrixXd& p, const Eigen::MatrixXd& k,
                    const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                    const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Zero matrix shaped like p with q placed at block (block_row, block_col).
BlockMatrix l_zero(const BlockMatrix& p, const Eigen::MatrixXd& q,
                   int block_row, int block_col);

// Identity on every diagonal block of p except q at (block_index, block_index);
// off-diagonal blocks zero. p must be square block-partitioned.
BlockMatrix l_iden(const BlockMatrix& p, const Eigen::MatrixXd& q,
                   int block_index);

// Convex combination sum_k weights[k] * values[k]. Weights must be
// nonnegative and sum to 1 within 1e-12.
Eigen::MatrixXd pi_mix(const std::vector<Eigen::MatrixXd>& values,
                       const Eigen::VectorXd& weights);

}  // namespace dncs
