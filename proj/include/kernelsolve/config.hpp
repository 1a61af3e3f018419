#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "kernelsolve/compress.hpp"
#include "kernelsolve/kernels.hpp"
#include "kernelsolve/point_io.hpp"

namespace kernelsolve {

inline constexpr int kSchemaVersion = 1;

/// Schema violation in a run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetConfig {
  /// File source.
  std::optional<std::string> path;
  PointFormat format = PointFormat::csv;
  /// Synthetic source: a gen_synthetic kind or "two-cluster" (labelled).
  std::optional<std::string> synthetic;
  std::size_t n = 0;
  std::size_t d = 0;
  double separation = 5.0;

  bool is_synthetic() const noexcept { return synthetic.has_value(); }
};

struct VerifyConfig {
  double matvec_tol = 1e-4;
  double solve_tol = 1e-4;
  double roundtrip_tol = 1e-8;
  double symmetry_tol = 1e-12;
  std::size_t trials = 3;
};

struct BenchConfig {
  std::vector<std::size_t> sizes = {4096, 8192};
  std::size_t repetitions = 3;
};

struct RunConfig {
  DatasetConfig dataset;
  KernelSpec kernel;
  /// Bandwidth is replaced by the median pairwise distance of the data.
  bool median_bandwidth = false;
  std::size_t leaf_size = 256;
  CompressionParams compression;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::size_t oracle_cap = 8192;
  /// Compare against the dense oracle in solve/matvec/krr (verify always does).
  bool oracle = false;

  std::optional<std::string> rhs;
  std::optional<std::string> weights;
  std::optional<std::string> labels;
  std::optional<std::string> output;

  std::optional<DatasetConfig> test;
  std::optional<std::string> test_labels;
  /// Test points drawn for a synthetic two-cluster dataset.
  std::size_t test_n = 0;

  VerifyConfig verify;
  BenchConfig bench;

  /// Throws ConfigError on any schema violation.
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

}  // namespace kernelsolve
