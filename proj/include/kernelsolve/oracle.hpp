#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kernelsolve/dense.hpp"
#include "kernelsolve/kernels.hpp"
#include "kernelsolve/linalg.hpp"

namespace kernelsolve {

inline constexpr std::size_t kDefaultOracleCap = 8192;

/**
 *  Dense reference: materializes K entrywise and factors K + lambda I.
 *  Refuses point sets larger than `cap` to bound the O(n^3) cost.
 *  Vectors are in original point order.
 */
class DenseOracle {
 public:
  DenseOracle(const PointSet& points, const KernelSpec& spec, double lambda,
              std::size_t cap = kDefaultOracleCap);

  const DenseMatrix& matrix() const noexcept { return k_; }
  double lambda() const noexcept { return lambda_; }

  std::vector<double> matvec(std::span<const double> w) const;
  std::vector<double> solve(std::span<const double> b) const;
  DenseMatrix solve(const DenseMatrix& b) const;

 private:
  DenseMatrix k_;
  double lambda_;
  DenseFactor factor_;
};

/// ||a - b||_2 / ||b||_2 (0 when both vanish).
double relative_error(std::span<const double> a, std::span<const double> b);
double max_abs_difference(std::span<const double> a, std::span<const double> b);

}  // namespace kernelsolve
