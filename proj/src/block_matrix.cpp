#include "dncs/block_matrix.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace dncs {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* label) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(label) + " has non-finite entries");
  }
}

}  // namespace

Eigen::Index partition_total(const Partition& part) {
  return std::accumulate(part.begin(), part.end(), Eigen::Index{0});
}

void validate_partition(const Partition& part, const char* label) {
  if (part.empty()) {
    throw std::invalid_argument(std::string(label) + " partition is empty");
  }
  for (Eigen::Index d : part) {
    if (d <= 0) {
      throw std::invalid_argument(std::string(label) +
                                  " partition has a non-positive entry");
    }
  }
}

BlockMatrix::BlockMatrix(Eigen::MatrixXd data, Partition row_part,
                         Partition col_part)
    : data_(std::move(data)),
      row_part_(std::move(row_part)),
      col_part_(std::move(col_part)) {
  validate_partition(row_part_, "row");
  validate_partition(col_part_, "column");
  if (partition_total(row_part_) != data_.rows() ||
      partition_total(col_part_) != data_.cols()) {
    throw std::invalid_argument("block partition does not sum to matrix size");
  }
}

BlockMatrix BlockMatrix::Zero(const Partition& row_part,
                              const Partition& col_part) {
  validate_partition(row_part, "row");
  validate_partition(col_part, "column");
  return BlockMatrix(
      Eigen::MatrixXd::Zero(partition_total(row_part), partition_total(col_part)),
      row_part, col_part);
}

Eigen::Index BlockMatrix::row_offset(int block_row) const {
  if (block_row < 0 || block_row >= block_rows()) {
    throw std::invalid_argument("block row index out of range");
  }
  return std::accumulate(row_part_.begin(), row_part_.begin() + block_row,
                         Eigen::Index{0});
}

Eigen::Index BlockMatrix::col_offset(int block_col) const {
  if (block_col < 0 || block_col >= block_cols()) {
    throw std::invalid_argument("block column index out of range");
  }
  return std::accumulate(col_part_.begin(), col_part_.begin() + block_col,
                         Eigen::Index{0});
}

Eigen::Block<const Eigen::MatrixXd> BlockMatrix::block(int block_row,
                                                       int block_col) const {
  return data_.block(row_offset(block_row), col_offset(block_col),
                     row_part_[block_row], col_part_[block_col]);
}

Eigen::Block<const Eigen::MatrixXd> BlockMatrix::block_row(int block_row) const {
  return data_.block(row_offset(block_row), 0, row_part_[block_row], cols());
}

Eigen::Block<const Eigen::MatrixXd> BlockMatrix::block_col(int block_col) const {
  return data_.block(0, col_offset(block_col), rows(), col_part_[block_col]);
}

void BlockMatrix::set_block(int block_row, int block_col,
                            const Eigen::MatrixXd& value) {
  if (value.rows() != row_part_[block_row] ||
      value.cols() != col_part_[block_col]) {
    throw std::invalid_argument("block value dims do not match partition");
  }
  data_.block(row_offset(block_row), col_offset(block_col), value.rows(),
              value.cols()) = value;
}

BlockMatrix block_diagonal(const std::vector<Eigen::MatrixXd>& blocks) {
  if (blocks.empty()) {
    throw std::invalid_argument("block_diagonal needs at least one block");
  }
  Partition rows, cols;
  for (const auto& b : blocks) {
    rows.push_back(b.rows());
    cols.push_back(b.cols());
  }
  BlockMatrix out = BlockMatrix::Zero(rows, cols);
  for (int i = 0; i < static_cast<int>(blocks.size()); ++i) {
    out.set_block(i, i, blocks[i]);
  }
  return out;
}

double spectral_radius(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("spectral_radius requires a square matrix");
  }
  if (tol <= 0.0) {
    throw std::invalid_argument("spectral_radius tolerance must be positive");
  }
  require_finite(m, "spectral_radius input");
  if (m.rows() == 0) return 0.0;
  // General (possibly complex-pair) spectrum; a symmetric solver or power
  // iteration would miss rotation-type dominant eigenvalues.
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigensolver failed to converge");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  require_finite(a, "kron left input");
  require_finite(b, "kron right input");
  return Eigen::kroneckerProduct(a, b);
}

PsdOrder psd_order(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                   double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
    throw std::invalid_argument("psd_order requires square matrices of equal shape");
  }
  const Eigen::MatrixXd diff = 0.5 * ((b - a) + (b - a).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(diff);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigensolver failed");
  }
  const double lo = solver.eigenvalues().minCoeff();
  const double hi = solver.eigenvalues().maxCoeff();
  const bool le = lo >= -tol;  // B - A >= 0
  const bool ge = hi <= tol;   // B - A <= 0
  if (le && ge) return PsdOrder::kEqual;
  if (le) return PsdOrder::kLessEqual;
  if (ge) return PsdOrder::kGreaterEqual;
  return PsdOrder::kIncomparable;
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& q) {
  if (q.rows() != q.cols()) {
    throw std::invalid_argument("sqrt_psd requires a square matrix");
  }
  const Eigen::MatrixXd sym = 0.5 * (q + q.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigensolver failed");
  }
  Eigen::VectorXd ev = solver.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-10) {
      throw std::invalid_argument("sqrt_psd input is not PSD to tolerance");
    }
    if (ev[i] < 0.0) ev[i] = 0.0;
  }
  return solver.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
         solver.eigenvectors().transpose();
}

}  // namespace dncs
