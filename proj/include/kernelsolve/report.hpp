#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kernelsolve/compress.hpp"
#include "kernelsolve/pipeline.hpp"
#include "kernelsolve/solver.hpp"
#include "kernelsolve/tree.hpp"

namespace kernelsolve {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::optional<double> value;
  std::optional<double> threshold;

  bool operator==(const CheckResult&) const = default;
};

struct BenchRow {
  std::size_t n = 0;
  PhaseTimings timings;
  std::size_t max_rank = 0;
};

/**
 *  Result record shared by every command. Accuracy values are computed
 *  against an explicit reference or left empty (serialized as null);
 *  nothing is extrapolated.
 */
struct RunReport {
  std::string command;
  nlohmann::json config = nlohmann::json::object();

  // accuracy
  std::optional<double> matvec_rel_error;
  std::optional<double> matvec_max_abs_error;
  std::optional<double> solve_rel_error;
  std::optional<double> solve_max_abs_error;
  std::optional<double> roundtrip_rel_error;
  std::optional<double> train_accuracy;
  std::optional<double> test_accuracy;
  std::optional<double> oracle_sign_agreement;

  // structure
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t depth = 0;
  std::size_t leaves = 0;
  double bandwidth = 0.0;
  CompressionStats compression;
  std::size_t factor_memory_bytes = 0;

  PhaseTimings timings;
  FactorDiagnostics diagnostics;

  std::vector<CheckResult> checks;
  std::vector<BenchRow> bench;
  /// Least-squares slope of log(time) against log(n), keyed by phase.
  std::vector<std::pair<std::string, double>> growth_exponents;

  bool passed() const;
  void add_check(std::string name, bool ok, std::optional<double> value = std::nullopt,
                 std::optional<double> threshold = std::nullopt);

  /// Fills structure, timings, diagnostics from a built system.
  void record_system(const KernelSystem& sys);

  nlohmann::json to_json() const;
  static RunReport from_json(const nlohmann::json& j);
};

/// Debug dump of node ranges, levels and split planes. Not a stable format.
nlohmann::json tree_to_json(const PartitionTree& tree);

}  // namespace kernelsolve
