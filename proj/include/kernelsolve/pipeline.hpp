#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "kernelsolve/compress.hpp"
#include "kernelsolve/kernels.hpp"
#include "kernelsolve/solver.hpp"
#include "kernelsolve/tree.hpp"

namespace kernelsolve {

struct SolverSettings {
  std::size_t leaf_size = 256;
  CompressionParams compression;
  double lambda = 1.0;
  int threads = 1;
};

struct PhaseTimings {
  double tree = 0.0;
  double knn = 0.0;
  double compress = 0.0;
  double factorize = 0.0;
  double solve = 0.0;
};

/**
 *  Owns everything needed to apply or invert K~ + lambda I for one point set:
 *  the tree, neighbour lists, compressed kernel, and (optionally) the factor.
 *  Vectors passed to the *_original methods are in original point order.
 */
class KernelSystem {
 public:
  /// Builds tree, neighbours and compression; factorizes when `factor` is set.
  static std::unique_ptr<KernelSystem> build(PointSet points, const KernelSpec& spec,
                                             const SolverSettings& settings, bool factor = true);

  KernelSystem(const KernelSystem&) = delete;
  KernelSystem& operator=(const KernelSystem&) = delete;

  const PointSet& points() const noexcept { return points_; }
  const PartitionTree& tree() const noexcept { return tree_; }
  const NeighborLists& neighbors() const noexcept { return neighbors_; }
  const CompressedKernel& kernel() const { return *kernel_; }
  bool factorized() const noexcept { return factor_.has_value(); }
  const HierFactor& factor() const;
  const SolverSettings& settings() const noexcept { return settings_; }
  PhaseTimings& timings() noexcept { return timings_; }
  const PhaseTimings& timings() const noexcept { return timings_; }

  void factorize();

  std::vector<double> matvec_original(std::span<const double> w) const;
  std::vector<double> solve_original(std::span<const double> b);
  DenseMatrix solve_original(const DenseMatrix& b);

 private:
  KernelSystem(PointSet points, const KernelSpec& spec, const SolverSettings& settings);

  PointSet points_;
  KernelSpec spec_;
  SolverSettings settings_;
  PartitionTree tree_;
  NeighborLists neighbors_;
  std::optional<CompressedKernel> kernel_;
  std::optional<HierFactor> factor_;
  PhaseTimings timings_;
};

/// Neighbour count actually usable for n points.
std::size_t effective_neighbors(std::size_t requested, std::size_t n);

/// Weights (K~ + lambda I)^-1 y in original point order.
std::vector<double> krr_fit(const PointSet& points, const KernelSpec& spec, double lambda,
                            std::span<const double> labels, const SolverSettings& settings);

/// predictions_j = sum_i k(test_j, train_i) w_i, evaluated densely.
std::vector<double> krr_predict(const PointSet& train, std::span<const double> weights,
                                const KernelSpec& spec, const PointSet& test);

}  // namespace kernelsolve
