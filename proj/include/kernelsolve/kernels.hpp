#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kernelsolve/dense.hpp"

namespace kernelsolve {

/**
 *  n points in d dimensions, row-major. ids() are the original global
 *  identifiers 0..n-1; every other structure refers to points by these ids.
 */
class PointSet {
 public:
  PointSet() = default;
  /// Throws InvalidArgument for n = 0, d = 0, a size mismatch, or non-finite data.
  PointSet(std::size_t n, std::size_t d, std::vector<double> coords);

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }
  std::span<const double> point(std::size_t id) const { return {coords_.data() + id * d_, d_}; }
  std::span<const double> coords() const noexcept { return coords_; }
  const std::vector<std::size_t>& ids() const noexcept { return ids_; }

  /// New point set made of the given ids, renumbered 0..k-1.
  PointSet subset(std::span<const std::size_t> ids) const;

  bool operator==(const PointSet& other) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> coords_;
  std::vector<std::size_t> ids_;
};

enum class KernelFamily { gaussian, laplace, polynomial };

std::string_view to_string(KernelFamily family);
KernelFamily kernel_family_from_string(std::string_view name);

/**
 *  gaussian:   exp(-|x-y|^2 / (2 h^2))
 *  laplace:    exp(-|x-y| / h)            (equals 1 at x = y)
 *  polynomial: (x.y + c)^p
 */
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double bandwidth = 1.0;
  int degree = 2;
  double shift = 1.0;

  static KernelSpec gaussian(double h) { return {KernelFamily::gaussian, h, 2, 1.0}; }
  static KernelSpec laplace(double h) { return {KernelFamily::laplace, h, 2, 1.0}; }
  static KernelSpec polynomial(int p, double c) { return {KernelFamily::polynomial, 1.0, p, c}; }

  /// Throws InvalidArgument when h <= 0 or p < 1.
  void validate() const;
};

double squared_distance(std::span<const double> x, std::span<const double> y);

/// Throws InvalidArgument on a dimension mismatch or non-finite input.
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// Unchecked evaluation for hot loops over validated point sets.
double kernel_eval_unchecked(const KernelSpec& spec, std::span<const double> x,
                             std::span<const double> y);

/// K(rows, cols) over point ids.
DenseMatrix kernel_block(const KernelSpec& spec, const PointSet& points,
                         std::span<const std::size_t> rows, std::span<const std::size_t> cols);

/// Median of all pairwise distances over at most `max_sample` points
/// (a seeded subsample when n exceeds it).
double median_pairwise_distance(const PointSet& points, std::size_t max_sample = 2048,
                                std::uint64_t seed = 0);

double min_pairwise_distance(const PointSet& points);

}  // namespace kernelsolve
