#include "kernelsolve/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kernelsolve/error.hpp"
#include "kernelsolve/random.hpp"

namespace kernelsolve {

PointSet::PointSet(std::size_t n, std::size_t d, std::vector<double> coords)
    : n_(n), d_(d), coords_(std::move(coords)) {
  if (n_ == 0) throw InvalidArgument("PointSet: n must be >= 1");
  if (d_ == 0) throw InvalidArgument("PointSet: d must be >= 1");
  if (coords_.size() != n_ * d_) throw InvalidArgument("PointSet: coordinate array has wrong length");
  if (!std::all_of(coords_.begin(), coords_.end(), [](double v) { return std::isfinite(v); }))
    throw InvalidArgument("PointSet: non-finite coordinate");
  ids_.resize(n_);
  std::iota(ids_.begin(), ids_.end(), 0);
}

PointSet PointSet::subset(std::span<const std::size_t> ids) const {
  std::vector<double> c;
  c.reserve(ids.size() * d_);
  for (std::size_t id : ids) {
    if (id >= n_) throw InvalidArgument("PointSet::subset: id out of range");
    auto p = point(id);
    c.insert(c.end(), p.begin(), p.end());
  }
  return PointSet(ids.size(), d_, std::move(c));
}

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::laplace: return "laplace";
    case KernelFamily::polynomial: return "polynomial";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "laplace") return KernelFamily::laplace;
  if (name == "polynomial") return KernelFamily::polynomial;
  throw InvalidArgument("unknown kernel family '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
  if (family != KernelFamily::polynomial && !(bandwidth > 0.0 && std::isfinite(bandwidth)))
    throw InvalidArgument("kernel bandwidth must be positive and finite");
  if (family == KernelFamily::polynomial) {
    if (degree < 1) throw InvalidArgument("polynomial degree must be >= 1");
    if (!std::isfinite(shift)) throw InvalidArgument("polynomial shift must be finite");
  }
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = x[k] - y[k];
    s += t * t;
  }
  return s;
}

double kernel_eval_unchecked(const KernelSpec& spec, std::span<const double> x,
                             std::span<const double> y) {
  switch (spec.family) {
    case KernelFamily::gaussian:
      return std::exp(-squared_distance(x, y) / (2.0 * spec.bandwidth * spec.bandwidth));
    case KernelFamily::laplace:
      return std::exp(-std::sqrt(squared_distance(x, y)) / spec.bandwidth);
    case KernelFamily::polynomial: {
      double s = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
      return std::pow(s + spec.shift, spec.degree);
    }
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("kernel_eval: dimension mismatch");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(x.begin(), x.end(), finite) || !std::all_of(y.begin(), y.end(), finite))
    throw InvalidArgument("kernel_eval: non-finite input");
  spec.validate();
  return kernel_eval_unchecked(spec, x, y);
}

DenseMatrix kernel_block(const KernelSpec& spec, const PointSet& points,
                         std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
  const std::size_t n = points.size();
  for (std::size_t id : rows)
    if (id >= n) throw InvalidArgument("kernel_block: row id out of range");
  for (std::size_t id : cols)
    if (id >= n) throw InvalidArgument("kernel_block: column id out of range");
  DenseMatrix k(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto xi = points.point(rows[i]);
    for (std::size_t j = 0; j < cols.size(); ++j)
      k(i, j) = kernel_eval_unchecked(spec, xi, points.point(cols[j]));
  }
  return k;
}

double median_pairwise_distance(const PointSet& points, std::size_t max_sample, std::uint64_t seed) {
  std::vector<std::size_t> ids(points.size());
  std::iota(ids.begin(), ids.end(), 0);
  if (max_sample >= 2 && ids.size() > max_sample) {
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < max_sample; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (ids.size() - i));
      std::swap(ids[i], ids[j]);
    }
    ids.resize(max_sample);
  }
  if (ids.size() < 2) return 0.0;
  std::vector<double> d;
  d.reserve(ids.size() * (ids.size() - 1) / 2);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j)
      d.push_back(std::sqrt(squared_distance(points.point(ids[i]), points.point(ids[j]))));
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + mid, d.end());
  double med = d[mid];
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), d.begin() + mid));
  return med;
}

double min_pairwise_distance(const PointSet& points) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      best = std::min(best, squared_distance(points.point(i), points.point(j)));
  return std::sqrt(best);
}

}  // namespace kernelsolve
