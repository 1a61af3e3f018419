#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kernelsolve/config.hpp"
#include "kernelsolve/report.hpp"

namespace kernelsolve {

/// Process exit codes; a stable contract for scripts.
enum class ExitCode : int { ok = 0, check_failed = 1, config_error = 2, numerical_error = 3 };

struct CommandOptions {
  std::optional<std::string> dump_tree;
};

struct CommandResult {
  RunReport report;
  ExitCode exit_code = ExitCode::ok;
};

/// Commands accepted by run_command.
const std::vector<std::string>& command_names();

/**
 *  Runs one of build, solve, matvec, krr, verify, bench. Throws ConfigError,
 *  ParseError, DataError, InvalidArgument or NumericalError; see execute()
 *  for the exit-code mapping.
 */
CommandResult run_command(std::string_view command, const RunConfig& cfg, const CommandOptions& opts = {});

struct Outcome {
  nlohmann::json document;
  ExitCode exit_code = ExitCode::ok;
};

/// Parses `config`, runs the command and maps failures to an exit code plus a
/// JSON error object {"schema": 1, "error": {"kind": ..., "message": ...}}.
Outcome execute(std::string_view command, const nlohmann::json& config, const CommandOptions& opts = {},
                std::optional<int> threads = std::nullopt, std::optional<std::uint64_t> seed = std::nullopt);

nlohmann::json error_document(std::string_view kind, std::string_view message);

struct Dataset {
  PointSet points;
  std::optional<std::vector<double>> labels;
};

Dataset load_dataset(const DatasetConfig& ds, std::uint64_t seed);

/// Least-squares slope of log(t) against log(n).
double fit_growth_exponent(std::span<const double> n, std::span<const double> t);

/// Seeded standard normal vector.
std::vector<double> random_vector(std::size_t n, std::uint64_t seed);

}  // namespace kernelsolve
