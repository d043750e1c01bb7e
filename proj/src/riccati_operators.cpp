#include "dncs/riccati_operators.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace dncs {

namespace {

constexpr double kConditioningTol = 1e-12;

void check_riccati_dims(const Eigen::MatrixXd& p, const Eigen::MatrixXd& r,
                        const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  if (a.cols() != n || p.rows() != n || p.cols() != n || b.rows() != n ||
      r.rows() != m || r.cols() != m) {
    throw std::invalid_argument("Riccati operator dimension mismatch");
  }
}

// Cholesky factor of S = R + B'PB with a conditioning guard: an eigenvalue
// ratio below 1e-12 means the effective input cost is singular.
Eigen::LLT<Eigen::MatrixXd> factor_input_cost(const Eigen::MatrixXd& p,
                                              const Eigen::MatrixXd& r,
                                              const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd s_raw = r + b.transpose() * p * b;
  const Eigen::MatrixXd s = 0.5 * (s_raw + s_raw.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(s, Eigen::EigenvaluesOnly);
  if (eigs.info() != Eigen::Success) {
    throw std::runtime_error("eigensolver failed on R + B'PB");
  }
  const double lo = eigs.eigenvalues().minCoeff();
  const double hi = eigs.eigenvalues().maxCoeff();
  if (!(lo > kConditioningTol * std::max(1.0, hi))) {
    throw std::runtime_error("R + B'PB is singular to working precision");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("Cholesky factorization of R + B'PB failed");
  }
  return llt;
}

}  // namespace

Eigen::MatrixXd omega(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q,
                      const Eigen::MatrixXd& r, const Eigen::MatrixXd& a,
                      const Eigen::MatrixXd& b) {
  check_riccati_dims(p, r, a, b);
  if (q.rows() != a.rows() || q.cols() != a.rows()) {
    throw std::invalid_argument("Riccati operator dimension mismatch");
  }
  const auto llt = factor_input_cost(p, r, b);
  const Eigen::MatrixXd g = b.transpose() * p * a;  // B'PA
  const Eigen::MatrixXd raw =
      q + a.transpose() * p * a - g.transpose() * llt.solve(g);
  return 0.5 * (raw + raw.transpose());
}

Eigen::MatrixXd psi(const Eigen::MatrixXd& p, const Eigen::MatrixXd& r,
                    const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_riccati_dims(p, r, a, b);
  const auto llt = factor_input_cost(p, r, b);
  return -llt.solve(b.transpose() * p * a);
}

Eigen::MatrixXd phi(const Eigen::MatrixXd& p, const Eigen::MatrixXd& k,
                    const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                    const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_riccati_dims(p, r, a, b);
  if (k.rows() != b.cols() || k.cols() != a.rows() || q.rows() != a.rows() ||
      q.cols() != a.rows()) {
    throw std::invalid_argument("Riccati operator dimension mismatch");
  }
  const Eigen::MatrixXd closed = a + b * k;
  const Eigen::MatrixXd raw =
      q + k.transpose() * r * k + closed.transpose() * p * closed;
  return 0.5 * (raw + raw.transpose());
}

BlockMatrix l_zero(const BlockMatrix& p, const Eigen::MatrixXd& q,
                   int block_row, int block_col) {
  BlockMatrix out = BlockMatrix::Zero(p.row_partition(), p.col_partition());
  out.set_block(block_row, block_col, q);  // validates index and dims
  return out;
}

BlockMatrix l_iden(const BlockMatrix& p, const Eigen::MatrixXd& q,
                   int block_index) {
  if (p.rows() != p.cols() || p.block_rows() != p.block_cols()) {
    throw std::invalid_argument("l_iden requires a square block matrix");
  }
  BlockMatrix out = BlockMatrix::Zero(p.row_partition(), p.col_partition());
  for (int i = 0; i < out.block_rows(); ++i) {
    if (i == block_index) continue;
    if (p.row_partition()[i] != p.col_partition()[i]) {
      throw std::invalid_argument("l_iden diagonal block is not square");
    }
    out.set_block(i, i, Eigen::MatrixXd::Identity(p.row_partition()[i],
                                                  p.col_partition()[i]));
  }
  out.set_block(block_index, block_index, q);
  return out;
}

Eigen::MatrixXd pi_mix(const std::vector<Eigen::MatrixXd>& values,
                       const Eigen::VectorXd& weights) {
  if (values.empty() ||
      weights.size() != static_cast<Eigen::Index>(values.size())) {
    throw std::invalid_argument("pi_mix needs one weight per matrix");
  }
  if (weights.minCoeff() < 0.0 || std::abs(weights.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("pi_mix probability row invalid");
  }
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Zero(values[0].rows(), values[0].cols());
  for (size_t k = 0; k < values.size(); ++k) {
    if (values[k].rows() != out.rows() || values[k].cols() != out.cols()) {
      throw std::invalid_argument("pi_mix matrices must share one shape");
    }
    out += weights[static_cast<Eigen::Index>(k)] * values[k];
  }
  return out;
}

}  // namespace dncs
