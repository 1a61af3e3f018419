#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "kernelsolve/error.hpp"
#include "kernelsolve/kernels.hpp"
#include "kernelsolve/point_io.hpp"
#include "kernelsolve/synthetic.hpp"
#include "oracles.hpp"

using namespace kernelsolve;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "kernelsolve_test_kernels";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST_CASE("kernel values at simple points") {
  const std::vector<double> x{0.0, 0.0}, y{1.0, 1.0}, z{3.0, 4.0};
  CHECK(kernel_eval(KernelSpec::gaussian(1.0), x, x) == 1.0);
  CHECK(kernel_eval(KernelSpec::gaussian(1.0), x, y) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(kernel_eval(KernelSpec::laplace(0.7), x, x) == 1.0);
  CHECK(kernel_eval(KernelSpec::laplace(2.0), x, z) == doctest::Approx(std::exp(-2.5)).epsilon(1e-15));
  // (x.y + c)^p with x.y = 7
  CHECK(kernel_eval(KernelSpec::polynomial(3, 1.0), y, z) == doctest::Approx(512.0).epsilon(1e-15));
  CHECK(kernel_eval(KernelSpec::gaussian(0.5), z, y) == doctest::Approx(std::exp(-13.0 / 0.5)).epsilon(1e-14));
}

TEST_CASE("kernel_eval rejects bad input") {
  const std::vector<double> x{0.0, 0.0}, y3{1.0, 1.0, 1.0};
  const std::vector<double> bad{0.0, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(kernel_eval(KernelSpec::gaussian(1.0), x, y3), InvalidArgument);
  CHECK_THROWS_AS(kernel_eval(KernelSpec::gaussian(1.0), x, bad), InvalidArgument);
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(KernelSpec::laplace(-1.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(KernelSpec::polynomial(0, 1.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(kernel_family_from_string("cauchy"), InvalidArgument);
  CHECK(kernel_family_from_string("laplace") == KernelFamily::laplace);
}

TEST_CASE("kernels are exactly symmetric") {
  const auto v = oracle::normal_vector(200 * 3, 5);
  for (const KernelSpec& spec : {KernelSpec::gaussian(0.8), KernelSpec::laplace(1.3), KernelSpec::polynomial(3, 0.5)}) {
    for (std::size_t i = 0; i + 6 <= v.size(); i += 6) {
      std::span<const double> a(v.data() + i, 3), b(v.data() + i + 3, 3);
      CHECK(kernel_eval(spec, a, b) == kernel_eval(spec, b, a));
    }
  }
}

TEST_CASE("gaussian entries shrink as the bandwidth shrinks") {
  const PointSet pts = gen_synthetic(SyntheticKind::uniform_cube, 20, 2, 3);
  const double dmin = min_pairwise_distance(pts);
  DenseMatrix prev = kernel_block(KernelSpec::gaussian(dmin), pts, pts.ids(), pts.ids());
  for (double f : {0.1, 0.01, 0.001}) {
    const DenseMatrix k = kernel_block(KernelSpec::gaussian(f * dmin), pts, pts.ids(), pts.ids());
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t j = 0; j < 20; ++j) {
        if (i == j) continue;
        CHECK(k(i, j) <= prev(i, j));
      }
    prev = k;
  }
  CHECK(prev.max_abs() == 1.0);  // only the diagonal survives
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 20; ++j)
      if (i != j) CHECK(prev(i, j) == 0.0);
}

TEST_CASE("kernel_block") {
  const PointSet pts = gen_synthetic(SyntheticKind::gaussian_mixture, 12, 3, 9);
  const KernelSpec spec = KernelSpec::gaussian(1.7);

  SUBCASE("single entry") {
    const std::vector<std::size_t> r{4}, c{4};
    const DenseMatrix k = kernel_block(spec, pts, r, c);
    CHECK(k.rows() == 1);
    CHECK(k.cols() == 1);
    CHECK(k(0, 0) == 1.0);
  }
  SUBCASE("full block is symmetric with unit diagonal") {
    const DenseMatrix k = kernel_block(spec, pts, pts.ids(), pts.ids());
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(k(i, i) == 1.0);
      for (std::size_t j = 0; j < 12; ++j) CHECK(k(i, j) == k(j, i));
    }
  }
  SUBCASE("matches entrywise evaluation and transposes") {
    const std::vector<std::size_t> r{0, 3, 5, 7, 11}, c{1, 2, 4, 6, 8, 9, 10};
    const DenseMatrix k = kernel_block(spec, pts, r, c);
    const DenseMatrix kt = kernel_block(spec, pts, c, r);
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = 0; j < c.size(); ++j) {
        const double ref = oracle::gaussian(pts.point(r[i]).data(), pts.point(c[j]).data(), 3, 1.7);
        CHECK(k(i, j) == doctest::Approx(ref).epsilon(1e-15));
        CHECK(kt(j, i) == k(i, j));
      }
  }
  SUBCASE("empty and out of range") {
    const std::vector<std::size_t> none, bad{12};
    CHECK(kernel_block(spec, pts, none, pts.ids()).rows() == 0);
    CHECK_THROWS_AS(kernel_block(spec, pts, bad, pts.ids()), InvalidArgument);
  }
}

TEST_CASE("pairwise distance statistics") {
  const PointSet pts(4, 1, {0.0, 1.0, 3.0, 7.0});
  // distances: 1 3 7 2 6 4
  CHECK(min_pairwise_distance(pts) == 1.0);
  CHECK(median_pairwise_distance(pts) == doctest::Approx(3.5));
}

TEST_CASE("PointSet invariants") {
  CHECK_THROWS_AS(PointSet(0, 2, {}), InvalidArgument);
  CHECK_THROWS_AS(PointSet(2, 2, {1.0, 2.0, 3.0}), InvalidArgument);
  CHECK_THROWS_AS(PointSet(1, 2, {1.0, std::numeric_limits<double>::infinity()}), InvalidArgument);
  const PointSet p(3, 2, {0, 1, 2, 3, 4, 5});
  const std::vector<std::size_t> pick{2, 0};
  const PointSet s = p.subset(pick);
  CHECK(s.size() == 2);
  CHECK(s.point(0)[1] == 5.0);
  CHECK(s.point(1)[0] == 0.0);
}

TEST_CASE("load_points csv") {
  const fs::path f = scratch("two.csv");
  write_text(f, "0,0\n1,0\n");
  const PointSet p = load_points(f, PointFormat::csv);
  CHECK(p.size() == 2);
  CHECK(p.dim() == 2);
  CHECK(p.point(1)[0] == 1.0);

  write_text(f, "0,0\n1,0,2\n");
  try {
    (void)load_points(f, PointFormat::csv);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 2);
  }
  write_text(f, "0,0\n1,zz\n3,3\n");
  try {
    (void)load_points(f, PointFormat::csv);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 2);
  }
  write_text(f, "1,2\nnan,3\n");
  CHECK_THROWS_AS((void)load_points(f, PointFormat::csv), DataError);
  write_text(f, "");
  CHECK_THROWS_AS((void)load_points(f, PointFormat::csv), ParseError);
  CHECK_THROWS_AS((void)load_points(scratch("missing.csv"), PointFormat::csv), ParseError);
}

TEST_CASE("load_points binary") {
  const fs::path f = scratch("three.bin");
  std::string bytes(16 + 3 * 8, '\0');
  const std::uint64_t n = 3, d = 1;
  const double v[3] = {0.5, -2.0, 1e300};
  std::memcpy(bytes.data(), &n, 8);
  std::memcpy(bytes.data() + 8, &d, 8);
  std::memcpy(bytes.data() + 16, v, 24);
  write_text(f, bytes);
  const PointSet p = load_points(f, PointFormat::f64_binary);
  CHECK(p.size() == 3);
  CHECK(p.dim() == 1);
  CHECK(p.point(2)[0] == 1e300);

  write_text(f, bytes.substr(0, 30));
  CHECK_THROWS_AS((void)load_points(f, PointFormat::f64_binary), ParseError);
  write_text(f, bytes.substr(0, 10));
  try {
    (void)load_points(f, PointFormat::f64_binary);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 10);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(bytes.data() + 24, &nan, 8);
  write_text(f, bytes);
  CHECK_THROWS_AS((void)load_points(f, PointFormat::f64_binary), DataError);
}

TEST_CASE("save then load is bit exact") {
  const PointSet pts = gen_synthetic(SyntheticKind::helix, 300, 5, 21);
  for (PointFormat fmt : {PointFormat::csv, PointFormat::f64_binary}) {
    const fs::path f = scratch(fmt == PointFormat::csv ? "rt.csv" : "rt.bin");
    save_points(f, pts, fmt);
    const PointSet back = load_points(f, fmt);
    REQUIRE(back.size() == pts.size());
    REQUIRE(back.dim() == pts.dim());
    CHECK(std::memcmp(back.coords().data(), pts.coords().data(), pts.coords().size() * 8) == 0);
  }
  const std::vector<double> col{1.0 / 3.0, -1e-300, 7.0};
  save_column(scratch("col.csv"), col);
  CHECK(load_column(scratch("col.csv")) == col);
  CHECK(point_format_from_string("f64-binary") == PointFormat::f64_binary);
  CHECK_THROWS_AS(point_format_from_string("hdf5"), InvalidArgument);
}

TEST_CASE("synthetic generators are deterministic") {
  for (SyntheticKind kind : {SyntheticKind::gaussian_mixture, SyntheticKind::uniform_cube, SyntheticKind::helix}) {
    const PointSet a = gen_synthetic(kind, 257, 4, 99);
    const PointSet b = gen_synthetic(kind, 257, 4, 99);
    const PointSet c = gen_synthetic(kind, 257, 4, 100);
    CHECK(a == b);
    CHECK_FALSE(a == c);
  }
  CHECK_THROWS_AS(gen_synthetic(SyntheticKind::helix, 10, 2, 0), InvalidArgument);
  CHECK_THROWS_AS(gen_synthetic(SyntheticKind::uniform_cube, 0, 2, 0), InvalidArgument);
  CHECK(synthetic_kind_from_string("gaussian-mixture") == SyntheticKind::gaussian_mixture);
  CHECK_THROWS_AS(synthetic_kind_from_string("spiral"), InvalidArgument);
}

TEST_CASE("gaussian mixture sample mean") {
  const std::size_t n = 20000, d = 5;
  const PointSet p = gen_synthetic(SyntheticKind::gaussian_mixture, n, d, 17);
  const auto mean = mixture_mean(d);
  const std::size_t bits = static_cast<std::size_t>(std::log2(mixture_cluster_count(d)));
  CHECK(mixture_cluster_count(d) == 8);
  for (std::size_t k = 0; k < d; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p.point(i)[k];
    // lattice coordinates add a Bernoulli(1/2) * spacing component
    const double var = 1.0 + (k < bits ? kMixtureSpacing * kMixtureSpacing / 4.0 : 0.0);
    CHECK(std::abs(s / n - mean[k]) <= 5.0 * std::sqrt(var / n));
  }
}

TEST_CASE("helix lies on the unit cylinder") {
  const PointSet p = gen_synthetic(SyntheticKind::helix, 1000, 4, 5);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto x = p.point(i);
    CHECK(std::hypot(x[0], x[1]) == doctest::Approx(kHelixRadius).epsilon(1e-12));
    CHECK(x[2] >= 0.0);
    CHECK(x[2] < 2.0);
  }
}

TEST_CASE("uniform cube bounds") {
  const PointSet p = gen_synthetic(SyntheticKind::uniform_cube, 500, 3, 1);
  for (double c : p.coords()) {
    CHECK(c >= 0.0);
    CHECK(c < 1.0);
  }
}

TEST_CASE("two clusters") {
  const LabeledPoints lp = gen_two_clusters(1000, 3, 8.0, 4);
  REQUIRE(lp.labels.size() == 1000);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    CHECK(std::abs(lp.labels[i]) == 1.0);
    agree += (lp.points.point(i)[0] > 0.0) == (lp.labels[i] > 0.0);
  }
  CHECK(agree >= 990);
}
