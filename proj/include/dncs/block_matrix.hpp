#pragma once

#include <Eigen/Dense>
#include <vector>

namespace dncs {

// Block heights/widths, one entry per subsystem. All entries strictly positive.
using Partition = std::vector<Eigen::Index>;

Eigen::Index partition_total(const Partition& part);

// Throws std::invalid_argument if any entry is non-positive.
void validate_partition(const Partition& part, const char* label);

/**
 * Dense real matrix carrying a block partition on rows and columns.
 *
 * block(i, j) views exactly the submatrix spanned by block row i and block
 * column j (0-based). Values are immutable after assembly; set_block exists
 * for construction only.
 */
class BlockMatrix {
 public:
  BlockMatrix() = default;
  BlockMatrix(Eigen::MatrixXd data, Partition row_part, Partition col_part);

  static BlockMatrix Zero(const Partition& row_part, const Partition& col_part);

  const Eigen::MatrixXd& data() const { return data_; }
  const Partition& row_partition() const { return row_part_; }
  const Partition& col_partition() const { return col_part_; }

  Eigen::Index rows() const { return data_.rows(); }
  Eigen::Index cols() const { return data_.cols(); }
  int block_rows() const { return static_cast<int>(row_part_.size()); }
  int block_cols() const { return static_cast<int>(col_part_.size()); }

  Eigen::Index row_offset(int block_row) const;
  Eigen::Index col_offset(int block_col) const;

  Eigen::Block<const Eigen::MatrixXd> block(int block_row, int block_col) const;
  // Full block row [M]_{i,:} / block column [M]_{:,j}.
  Eigen::Block<const Eigen::MatrixXd> block_row(int block_row) const;
  Eigen::Block<const Eigen::MatrixXd> block_col(int block_col) const;

  void set_block(int block_row, int block_col, const Eigen::MatrixXd& value);

 private:
  Eigen::MatrixXd data_;
  Partition row_part_;
  Partition col_part_;
};

// Square block-diagonal assembly; partition taken from the blocks themselves.
BlockMatrix block_diagonal(const std::vector<Eigen::MatrixXd>& blocks);

/**
 * Max |lambda| over all (possibly complex) eigenvalues of m, computed via the
 * dense Schur-based eigensolver. The solver reaches machine precision on the
 * desk-scale matrices used here; tol only gates input validation.
 */
double spectral_radius(const Eigen::MatrixXd& m, double tol = 1e-9);

// Standard Kronecker product, dims (rA*rB) x (cA*cB).
Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

enum class PsdOrder {
  kLessEqual,     // A <= B in the PSD order
  kGreaterEqual,  // A >= B
  kEqual,         // both
  kIncomparable,  // neither
};

/**
 * Classifies the PSD-order relation between symmetric A and B via the
 * eigenvalues of (B - A): all >= -tol means A <= B, all <= tol means A >= B.
 * Inputs are symmetrized internally.
 */
PsdOrder psd_order(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                   double tol = 1e-9);

/**
 * Principal PSD square root via symmetric eigendecomposition. Eigenvalues in
 * [-1e-10, 0) are clipped to zero; anything more negative throws.
 */
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& q);

}  // namespace dncs
