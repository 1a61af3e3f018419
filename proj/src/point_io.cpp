#include "kernelsolve/point_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "kernelsolve/error.hpp"

namespace kernelsolve {

static_assert(std::endian::native == std::endian::little, "binary point format assumes a little-endian host");

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

double parse_real(std::string_view field, std::size_t row) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  if (field.empty()) throw ParseError("row " + std::to_string(row) + ": empty field", row);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError("row " + std::to_string(row) + ": cannot parse '" + std::string(field) + "'", row);
  if (!std::isfinite(v)) throw DataError("row " + std::to_string(row) + ": non-finite value");
  return v;
}

std::string format_real(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

PointSet load_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<double> coords;
  std::size_t d = 0, n = 0, row = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    std::size_t fields = 0;
    while (true) {
      const std::size_t comma = line.find(',');
      coords.push_back(parse_real(line.substr(0, comma), row));
      ++fields;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (d == 0) d = fields;
    if (fields != d)
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(d) + " fields, got " +
                           std::to_string(fields),
                       row);
    ++n;
  }
  if (n == 0) throw ParseError("'" + path.string() + "' contains no points", 0);
  return PointSet(n, d, std::move(coords));
}

std::uint64_t read_u64(const std::string& bytes, std::size_t offset) {
  std::uint64_t v = 0;
  std::memcpy(&v, bytes.data() + offset, sizeof v);
  return v;
}

PointSet load_binary(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 16) throw ParseError("binary header truncated at byte " + std::to_string(bytes.size()), bytes.size());
  const std::uint64_t n = read_u64(bytes, 0);
  const std::uint64_t d = read_u64(bytes, 8);
  if (n == 0 || d == 0) throw ParseError("binary header declares n or d = 0", 0);
  if (d > (bytes.size() - 16) / 8 || n > (bytes.size() - 16) / 8 / d)
    throw ParseError("binary payload truncated: header declares " + std::to_string(n) + "x" + std::to_string(d) +
                         " values but file has " + std::to_string(bytes.size()) + " bytes",
                     bytes.size());
  const std::size_t expected = 16 + n * d * 8;
  if (bytes.size() != expected)
    throw ParseError("binary file has " + std::to_string(bytes.size() - expected) + " trailing bytes at byte " +
                         std::to_string(expected),
                     expected);
  std::vector<double> coords(n * d);
  std::memcpy(coords.data(), bytes.data() + 16, n * d * 8);
  for (std::size_t k = 0; k < coords.size(); ++k)
    if (!std::isfinite(coords[k]))
      throw DataError("non-finite value at byte " + std::to_string(16 + 8 * k));
  return PointSet(n, d, std::move(coords));
}

}  // namespace

PointFormat point_format_from_string(std::string_view name) {
  if (name == "csv") return PointFormat::csv;
  if (name == "f64-binary" || name == "f64_binary" || name == "binary") return PointFormat::f64_binary;
  throw InvalidArgument("unknown point format '" + std::string(name) + "'");
}

PointSet load_points(const std::filesystem::path& path, PointFormat format) {
  return format == PointFormat::csv ? load_csv(path) : load_binary(path);
}

void save_points(const std::filesystem::path& path, const PointSet& points, PointFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  const std::size_t n = points.size(), d = points.dim();
  if (format == PointFormat::csv) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = points.point(i);
      for (std::size_t k = 0; k < d; ++k) {
        if (k) out << ',';
        out << format_real(p[k]);
      }
      out << '\n';
    }
  } else {
    const std::uint64_t header[2] = {n, d};
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    out.write(reinterpret_cast<const char*>(points.coords().data()),
              static_cast<std::streamsize>(points.coords().size() * sizeof(double)));
  }
  if (!out) throw InvalidArgument("write to '" + path.string() + "' failed");
}

std::vector<double> load_column(const std::filesystem::path& path) {
  const PointSet p = load_csv(path);
  if (p.dim() != 1) throw ParseError("'" + path.string() + "' must hold one value per row", 1);
  return {p.coords().begin(), p.coords().end()};
}

void save_column(const std::filesystem::path& path, std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  for (double v : values) out << format_real(v) << '\n';
}

}  // namespace kernelsolve
