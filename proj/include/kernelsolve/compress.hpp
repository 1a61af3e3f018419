#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kernelsolve/dense.hpp"
#include "kernelsolve/kernels.hpp"
#include "kernelsolve/tree.hpp"

namespace kernelsolve {

struct CompressionParams {
  /// Relative ID tolerance.
  double tol = 1e-5;
  std::size_t max_rank = 256;
  /// Sampled far-field rows per node; 0 selects default_sample_count().
  std::size_t samples = 0;
  /// Neighbour count used to guide sampling.
  std::size_t neighbors = 32;
  std::uint64_t seed = 0;
  int threads = 1;

  std::size_t sample_count() const;
  void validate() const;
};

/// max(2 * max_rank, 4 * neighbors)
std::size_t default_sample_count(std::size_t max_rank, std::size_t neighbors);

/**
 *  Nested skeleton of one node. A leaf's candidates are its own points; an
 *  internal node's candidates are its children's skeletons concatenated
 *  (left first), so skel is always drawn from the level below.
 */
struct Skeleton {
  std::size_t node = 0;
  /// Candidate global ids.
  std::vector<std::size_t> cand;
  /// Selected global ids, in pivot order.
  std::vector<std::size_t> skel;
  /// Position of each skel entry within cand.
  std::vector<std::size_t> skel_pos;
  /// s x |cand| interpolation coefficients; coeff(:, skel_pos) = I.
  DenseMatrix coeff;
  bool degenerate = false;
  double max_abs_coeff = 0.0;

  std::size_t rank() const noexcept { return skel.size(); }

  bool operator==(const Skeleton&) const = default;
};

struct LevelRankStats {
  std::size_t level = 0;
  std::size_t nodes = 0;
  std::size_t min_rank = 0;
  std::size_t max_rank = 0;
  double mean_rank = 0.0;
};

struct CompressionStats {
  std::vector<LevelRankStats> ranks_per_level;
  std::size_t max_rank = 0;
  std::size_t degenerate_nodes = 0;
  /// Nodes whose interpolation coefficients exceed kCoeffGrowthLimit.
  std::size_t coeff_growth_nodes = 0;
  double max_abs_coeff = 0.0;
  std::size_t memory_bytes = 0;
};

/**
 *  Hierarchically compressed kernel matrix
 *
 *    K~ = sum_leaves K(leaf, leaf) + sum_{siblings l,r} (U_l B_lr U_r^T + U_r B_lr^T U_l^T)
 *
 *  where U_a is the telescoped interpolation basis of node a and
 *  B_lr = K(S_l, S_r). All vectors are in tree (perm) order.
 *
 *  Holds non-owning references to the point set and tree; both must outlive it.
 */
class CompressedKernel {
 public:
  CompressedKernel(const PointSet& points, const PartitionTree& tree, KernelSpec spec,
                   CompressionParams params);

  const PointSet& points() const noexcept { return *points_; }
  const PartitionTree& tree() const noexcept { return *tree_; }
  const KernelSpec& spec() const noexcept { return spec_; }
  const CompressionParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return tree_->point_count(); }

  bool has_skeleton(std::size_t node) const { return skeletons_.at(node).has_value(); }
  const Skeleton& skeleton(std::size_t node) const;
  std::size_t rank(std::size_t node) const { return skeleton(node).rank(); }
  /// K(leaf, leaf) in perm order.
  const DenseMatrix& leaf_block(std::size_t leaf) const;
  /// K(S_left, S_right) for the children of an internal node.
  const DenseMatrix& coupling(std::size_t node) const;

  CompressionStats stats() const;

  bool operator==(const CompressedKernel& other) const;

 private:
  friend CompressedKernel compress(const PointSet&, const PartitionTree&, const KernelSpec&,
                                   const NeighborLists&, const CompressionParams&);
  friend void set_skeleton(CompressedKernel&, Skeleton);

  const PointSet* points_;
  const PartitionTree* tree_;
  KernelSpec spec_;
  CompressionParams params_;
  std::vector<std::optional<Skeleton>> skeletons_;
  std::vector<DenseMatrix> leaf_blocks_;
  std::vector<DenseMatrix> couplings_;
};

/**
 *  Far-field rows used to skeletonize `node`: neighbours of the node's points
 *  that lie outside it (nearest first, deduplicated), then a seeded uniform
 *  draw without replacement from the remaining exterior, up to
 *  min(count, n - |node|) ids. Empty for the root.
 */
std::vector<std::size_t> sample_rows(const PartitionTree& tree, std::size_t node,
                                     const NeighborLists& neighbors, std::size_t count,
                                     std::uint64_t seed);

/// Skeleton of a non-root node. Children must already carry skeletons.
Skeleton skeletonize_node(const CompressedKernel& partial, const NeighborLists& neighbors,
                          std::size_t node);

/// Installs a skeleton into a kernel under construction.
void set_skeleton(CompressedKernel& ck, Skeleton skeleton);

/// Bottom-up level-synchronous compression. Deterministic for a fixed seed,
/// independent of params.threads.
CompressedKernel compress(const PointSet& points, const PartitionTree& tree,
                          const KernelSpec& spec, const NeighborLists& neighbors,
                          const CompressionParams& params);

/// U_a c: expands skeleton weights to the node's points (perm order).
std::vector<double> apply_prolongation(const CompressedKernel& ck, std::size_t node,
                                       std::span<const double> c);
DenseMatrix apply_prolongation(const CompressedKernel& ck, std::size_t node, const DenseMatrix& c);

/// U_a^T y: exact transpose of apply_prolongation.
std::vector<double> skel_project(const CompressedKernel& ck, std::size_t node,
                                 std::span<const double> y);
DenseMatrix skel_project(const CompressedKernel& ck, std::size_t node, const DenseMatrix& y);

/// K~ w in perm order.
std::vector<double> hss_matvec(const CompressedKernel& ck, std::span<const double> w);
DenseMatrix hss_matvec(const CompressedKernel& ck, const DenseMatrix& w);

}  // namespace kernelsolve
