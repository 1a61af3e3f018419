#include "kernelsolve/oracle.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "kernelsolve/error.hpp"

namespace kernelsolve {

DenseOracle::DenseOracle(const PointSet& points, const KernelSpec& spec, double lambda, std::size_t cap)
    : lambda_(lambda) {
  if (points.size() > cap)
    throw InvalidArgument("dense oracle refused: n = " + std::to_string(points.size()) + " exceeds the cap of " +
                          std::to_string(cap) + " points");
  std::vector<std::size_t> ids(points.size());
  std::iota(ids.begin(), ids.end(), 0);
  k_ = kernel_block(spec, points, ids, ids);
  DenseMatrix shifted = k_;
  for (std::size_t i = 0; i < shifted.rows(); ++i) shifted(i, i) += lambda;
  factor_ = DenseFactor::factor_spd_or_lu(shifted);
}

std::vector<double> DenseOracle::matvec(std::span<const double> w) const {
  if (w.size() != k_.cols()) throw InvalidArgument("dense matvec: length mismatch");
  std::vector<double> out(k_.rows());
  for (std::size_t i = 0; i < k_.rows(); ++i) out[i] = dot(k_.row(i), w);
  return out;
}

std::vector<double> DenseOracle::solve(std::span<const double> b) const {
  const DenseMatrix x = factor_.solve(DenseMatrix::column(b));
  return {x.values().begin(), x.values().end()};
}

DenseMatrix DenseOracle::solve(const DenseMatrix& b) const { return factor_.solve(b); }

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("relative_error: length mismatch");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double nd = norm2(diff), nb = norm2(b);
  if (nb == 0.0) return nd == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return nd / nb;
}

double max_abs_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("max_abs_difference: length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace kernelsolve
