#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "kernelsolve/kernels.hpp"

namespace kernelsolve {

enum class SyntheticKind { gaussian_mixture, uniform_cube, helix };

SyntheticKind synthetic_kind_from_string(std::string_view name);
std::string_view to_string(SyntheticKind kind);

/// Spacing between neighbouring gaussian-mixture centres.
inline constexpr double kMixtureSpacing = 6.0;
inline constexpr std::size_t kMixtureMaxClusters = 16;
inline constexpr double kHelixRadius = 1.0;

/**
 *  Deterministic synthetic point sets.
 *
 *  gaussian-mixture: min(2^ceil(d/2), 16) unit-variance clusters. Cluster j is
 *    centred on the lattice vertex whose coordinate i (i < log2 #clusters) is
 *    kMixtureSpacing * bit_i(j); remaining coordinates are centred at 0.
 *    Cluster membership is uniform at random.
 *  uniform-cube: uniform on [0, 1]^d.
 *  helix: (cos t, sin t, t / 2pi) with t uniform on [0, 4pi); coordinates
 *    beyond the third are N(0, 0.1^2). Requires d >= 3.
 */
PointSet gen_synthetic(SyntheticKind kind, std::size_t n, std::size_t d, std::uint64_t seed);

std::size_t mixture_cluster_count(std::size_t d);
/// Expected value of a gaussian-mixture sample.
std::vector<double> mixture_mean(std::size_t d);

/// Two unit-variance clusters centred at -/+ separation/2 along the first axis,
/// labelled -1 / +1. Used for classification checks.
struct LabeledPoints {
  PointSet points;
  std::vector<double> labels;
};
LabeledPoints gen_two_clusters(std::size_t n, std::size_t d, double separation, std::uint64_t seed);

}  // namespace kernelsolve
