#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kernelsolve/compress.hpp"
#include "kernelsolve/dense.hpp"
#include "kernelsolve/linalg.hpp"

namespace kernelsolve {

inline constexpr double kConditionWarning = 1e10;
inline constexpr double kConditionLimit = 1e14;

struct LeafFactor {
  std::size_t node = 0;
  DenseFactor factor;
  bool lu_fallback = false;

  bool operator==(const LeafFactor&) const = default;
};

/**
 *  Reduced system of an internal node with children l, r:
 *    W = [0 B; B^T 0], G = blkdiag(H_l, H_r), Z = I + W G.
 */
struct NodeFactor {
  std::size_t node = 0;
  std::size_t s_left = 0;
  std::size_t s_right = 0;
  DenseFactor z;
  double z_condition = 0.0;

  bool operator==(const NodeFactor&) const = default;
};

struct FactorDiagnostics {
  std::size_t cholesky_fallbacks = 0;
  /// Largest Z condition estimate per level (levels without internal nodes report 0).
  std::vector<double> z_condition_max_per_level;
  std::vector<std::string> warnings;
};

/**
 *  Factored (K~ + lambda I)^-1 for a compressed kernel, built by a bottom-up
 *  Sherman-Morrison-Woodbury recursion. At an internal node with
 *  D = blkdiag(K~_l + lambda I, K~_r + lambda I) and U = blkdiag(U_l, U_r),
 *
 *    (D + U W U^T)^-1 = D^-1 - D^-1 U Z^-1 W U^T D^-1
 *
 *  and the parent receives H = P (G - G Z^-1 W G) P^T = U_a^T (K~_a + lambda I)^-1 U_a.
 *
 *  Keeps a reference to the compressed kernel; it must outlive the factor.
 */
class HierFactor {
 public:
  /// Throws IllConditionedError when a reduced system exceeds kConditionLimit.
  static HierFactor factorize(const CompressedKernel& ck, double lambda, int threads = 1);

  double lambda() const noexcept { return lambda_; }
  const CompressedKernel& kernel() const noexcept { return *ck_; }
  const FactorDiagnostics& diagnostics() const noexcept { return diagnostics_; }

  const LeafFactor& leaf_factor(std::size_t node) const;
  const NodeFactor& node_factor(std::size_t node) const;
  /// U_a^T (K~_a + lambda I)^-1 U_a for a non-root node.
  const DenseMatrix& reduced(std::size_t node) const;

  /// (K~ + lambda I)^-1 b, perm order. Two tree sweeps, linear in n for bounded ranks.
  std::vector<double> solve(std::span<const double> b, int threads = 1) const;
  DenseMatrix solve_many(const DenseMatrix& b, int threads = 1) const;

  /**
   *  Same operator applied by direct recursion: each node solves both
   *  children, projects, solves Z, then solves the children again on the
   *  prolonged correction. Quadratic in the leaf count; kept as a reference.
   */
  std::vector<double> solve_recursive(std::span<const double> b) const;

  std::size_t memory_bytes() const;

  bool operator==(const HierFactor& other) const;

 private:
  DenseMatrix solve_node_recursive(std::size_t node, const DenseMatrix& b) const;
  /// W x for node's children blocks.
  DenseMatrix apply_coupling(std::size_t node, const DenseMatrix& x) const;

  const CompressedKernel* ck_ = nullptr;
  double lambda_ = 0.0;
  std::vector<LeafFactor> leaf_factors_;
  std::vector<NodeFactor> node_factors_;
  std::vector<DenseMatrix> reduced_;
  FactorDiagnostics diagnostics_;
};

}  // namespace kernelsolve
