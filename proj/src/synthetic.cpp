#include "kernelsolve/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "kernelsolve/error.hpp"
#include "kernelsolve/random.hpp"

namespace kernelsolve {

namespace {

std::size_t lattice_bits(std::size_t clusters) {
  std::size_t b = 0;
  while ((std::size_t{1} << b) < clusters) ++b;
  return b;
}

}  // namespace

SyntheticKind synthetic_kind_from_string(std::string_view name) {
  if (name == "gaussian-mixture") return SyntheticKind::gaussian_mixture;
  if (name == "uniform-cube") return SyntheticKind::uniform_cube;
  if (name == "helix") return SyntheticKind::helix;
  throw InvalidArgument("unknown synthetic kind '" + std::string(name) + "'");
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::gaussian_mixture: return "gaussian-mixture";
    case SyntheticKind::uniform_cube: return "uniform-cube";
    case SyntheticKind::helix: return "helix";
  }
  return "unknown";
}

std::size_t mixture_cluster_count(std::size_t d) {
  const std::size_t half = (d + 1) / 2;
  if (half >= 4) return kMixtureMaxClusters;
  return std::min(kMixtureMaxClusters, std::size_t{1} << half);
}

std::vector<double> mixture_mean(std::size_t d) {
  const std::size_t bits = lattice_bits(mixture_cluster_count(d));
  std::vector<double> mean(d, 0.0);
  // each lattice bit is set in exactly half of the clusters
  for (std::size_t i = 0; i < std::min(bits, d); ++i) mean[i] = 0.5 * kMixtureSpacing;
  return mean;
}

PointSet gen_synthetic(SyntheticKind kind, std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw InvalidArgument("gen_synthetic: n and d must be >= 1");
  if (kind == SyntheticKind::helix && d < 3) throw InvalidArgument("gen_synthetic: helix requires d >= 3");

  SplitMix64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> coords(n * d);

  switch (kind) {
    case SyntheticKind::uniform_cube:
      for (double& c : coords) c = rng.uniform();
      break;
    case SyntheticKind::gaussian_mixture: {
      const std::size_t clusters = mixture_cluster_count(d);
      const std::size_t bits = lattice_bits(clusters);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = static_cast<std::size_t>(rng() % clusters);
        for (std::size_t k = 0; k < d; ++k) {
          const double centre = k < bits ? kMixtureSpacing * static_cast<double>((j >> k) & 1U) : 0.0;
          coords[i * d + k] = centre + normal(rng);
        }
      }
      break;
    }
    case SyntheticKind::helix:
      for (std::size_t i = 0; i < n; ++i) {
        const double t = 4.0 * std::numbers::pi * rng.uniform();
        coords[i * d + 0] = kHelixRadius * std::cos(t);
        coords[i * d + 1] = kHelixRadius * std::sin(t);
        coords[i * d + 2] = t / (2.0 * std::numbers::pi);
        for (std::size_t k = 3; k < d; ++k) coords[i * d + k] = 0.1 * normal(rng);
      }
      break;
  }
  return PointSet(n, d, std::move(coords));
}

LabeledPoints gen_two_clusters(std::size_t n, std::size_t d, double separation, std::uint64_t seed) {
  if (n < 1 || d < 1) throw InvalidArgument("gen_two_clusters: n and d must be >= 1");
  SplitMix64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> coords(n * d);
  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double label = (rng() & 1U) ? 1.0 : -1.0;
    labels[i] = label;
    for (std::size_t k = 0; k < d; ++k)
      coords[i * d + k] = (k == 0 ? 0.5 * separation * label : 0.0) + normal(rng);
  }
  return {PointSet(n, d, std::move(coords)), std::move(labels)};
}

}  // namespace kernelsolve
