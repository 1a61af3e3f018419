#pragma once

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "kernelsolve/kernels.hpp"

namespace kernelsolve {

/// csv: one point per row, comma separated, no header.
/// f64-binary: u64 n, u64 d (little endian), then n*d little-endian f64 row-major.
enum class PointFormat { csv, f64_binary };

PointFormat point_format_from_string(std::string_view name);

PointSet load_points(const std::filesystem::path& path, PointFormat format);
void save_points(const std::filesystem::path& path, const PointSet& points, PointFormat format);

/// Single-column CSV of reals (right-hand sides, labels, weights).
std::vector<double> load_column(const std::filesystem::path& path);
void save_column(const std::filesystem::path& path, std::span<const double> values);

}  // namespace kernelsolve
