#pragma once

#include <cstddef>
#include <vector>

#include "kernelsolve/dense.hpp"

namespace kernelsolve {

/// Column interpolative decomposition A ~= A(:, skel) * coeff.
struct IdResult {
  /// Selected column indices in pivot order.
  std::vector<std::size_t> skel;
  /// rank x cols; coeff(:, skel[k]) is the k-th unit vector.
  DenseMatrix coeff;
  std::size_t rank = 0;
  /// Input was identically zero; rank 1 with the first column was returned.
  bool degenerate = false;
  double max_abs_coeff = 0.0;
};

/// Coefficients larger than this are reported, not rejected.
inline constexpr double kCoeffGrowthLimit = 1e3;

/**
 *  Interpolative decomposition from column-pivoted Householder QR.
 *
 *  The rank is the number of leading pivots whose |R_kk| / |R_00| exceeds
 *  `tol`, capped at `max_rank`. Factorization stops as soon as the rank is
 *  known, so cost scales with the returned rank rather than min(rows, cols).
 */
IdResult pivoted_qr_id(const DenseMatrix& a, double tol, std::size_t max_rank);

enum class FactorKind { cholesky, lu };

/**
 *  Cholesky or partially pivoted LU factor of a square matrix. Immutable
 *  after construction; solves may run concurrently.
 */
class DenseFactor {
 public:
  DenseFactor() = default;

  /// Throws NotSpdError (cholesky) or SingularMatrixError (lu).
  static DenseFactor factor(DenseMatrix a, FactorKind kind);
  /// Cholesky, falling back to LU when the matrix is not numerically SPD.
  static DenseFactor factor_spd_or_lu(const DenseMatrix& a, bool* fell_back = nullptr);

  FactorKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return packed_.rows(); }

  /// Solves A X = B.
  DenseMatrix solve(const DenseMatrix& b) const;
  /// Solves A^T X = B.
  DenseMatrix solve_transposed(const DenseMatrix& b) const;

  /// 1-norm of the original matrix.
  double norm1() const noexcept { return norm1_; }
  /// Hager/Higham estimate of ||A||_1 ||A^-1||_1.
  double condition_estimate() const;

  /// Memory held by the packed factor.
  std::size_t memory_bytes() const noexcept { return packed_.size() * sizeof(double) + pivots_.size() * sizeof(std::size_t); }

  bool operator==(const DenseFactor&) const = default;

 private:
  void solve_in_place(DenseMatrix& x, bool transposed) const;

  FactorKind kind_ = FactorKind::cholesky;
  DenseMatrix packed_;
  std::vector<std::size_t> pivots_;
  double norm1_ = 0.0;
};

inline DenseMatrix dense_solve(const DenseFactor& f, const DenseMatrix& b) { return f.solve(b); }

}  // namespace kernelsolve
