#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "kernelsolve/error.hpp"
#include "kernelsolve/linalg.hpp"
#include "kernelsolve/parallel.hpp"
#include "kernelsolve/random.hpp"
#include "oracles.hpp"

using namespace kernelsolve;

namespace {

// m x n of exact rank r: G1 (m x r) * G2 (r x n).
DenseMatrix rank_r(std::size_t m, std::size_t n, std::size_t r, std::uint64_t seed) {
  return oracle::product(oracle::normal_matrix(m, r, seed), oracle::normal_matrix(r, n, seed + 1));
}

double id_residual(const DenseMatrix& a, const IdResult& id) {
  const DenseMatrix approx = oracle::product(a.select_columns(id.skel), id.coeff);
  return (a - approx).frobenius_norm() / a.frobenius_norm();
}

void check_identity_on_skeleton(const IdResult& id) {
  for (std::size_t k = 0; k < id.rank; ++k)
    for (std::size_t i = 0; i < id.rank; ++i) CHECK(id.coeff(i, id.skel[k]) == (i == k ? 1.0 : 0.0));
}

DenseMatrix spd(std::size_t n, std::uint64_t seed) {
  const DenseMatrix g = oracle::normal_matrix(n, n, seed);
  DenseMatrix a = oracle::product(g, g.transposed());
  for (std::size_t i = 0; i < n; ++i) a(i, i) += static_cast<double>(n);
  return a;
}

}  // namespace

TEST_CASE("dense helpers") {
  DenseMatrix a(2, 3);
  a(0, 0) = 1; a(0, 1) = -2; a(0, 2) = 3;
  a(1, 0) = 4; a(1, 1) = 5;  a(1, 2) = -6;
  CHECK(a.norm1() == 9.0);
  CHECK(a.max_abs() == 6.0);
  CHECK(matmul(a, a.transposed()) == oracle::product(a, a.transposed()));
  CHECK(matmul_tn(a, a) == oracle::product(a.transposed(), a));
  CHECK(matmul_nt(a, a) == oracle::product(a, a.transposed()));
  CHECK(vstack(a, a).rows() == 4);
  CHECK(DenseMatrix::identity(3)(2, 2) == 1.0);
}

TEST_CASE("ID of two identical columns") {
  DenseMatrix a(3, 2);
  for (std::size_t i = 0; i < 3; ++i) a(i, 0) = a(i, 1) = 1.0 + i;
  const IdResult id = pivoted_qr_id(a, 1e-10, 10);
  CHECK(id.rank == 1);
  CHECK(id.coeff(0, 0) == doctest::Approx(1.0));
  CHECK(id.coeff(0, 1) == doctest::Approx(1.0));
  CHECK_FALSE(id.degenerate);
}

TEST_CASE("ID of the identity keeps every column") {
  const IdResult id = pivoted_qr_id(DenseMatrix::identity(5), 1e-10, 10);
  CHECK(id.rank == 5);
  std::vector<std::size_t> s = id.skel;
  std::sort(s.begin(), s.end());
  CHECK(s == std::vector<std::size_t>{0, 1, 2, 3, 4});
  check_identity_on_skeleton(id);
  for (std::size_t k = 0; k < 5; ++k)
    for (std::size_t j = 0; j < 5; ++j) CHECK(id.coeff(k, j) == (j == id.skel[k] ? 1.0 : 0.0));
}

TEST_CASE("ID recovers an exact rank") {
  const DenseMatrix a = rank_r(40, 30, 7, 3);
  const IdResult id = pivoted_qr_id(a, 1e-10, 30);
  CHECK(id.rank == 7);
  CHECK(id_residual(a, id) <= 1e-8);
  check_identity_on_skeleton(id);
}

TEST_CASE("ID identity-on-skeleton over random instances") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 5 + rng() % 60, n = 2 + rng() % 50, r = 1 + rng() % std::min(m, n);
    const IdResult id = pivoted_qr_id(rank_r(m, n, r, 100 + t), 1e-9, 64);
    CHECK(id.rank <= r);
    CHECK(id.coeff.rows() == id.rank);
    CHECK(id.coeff.cols() == n);
    check_identity_on_skeleton(id);
  }
}

TEST_CASE("ID error tracks the tolerance on graded spectra") {
  // A = Q1 diag(10^-k) Q2 with random orthogonal-ish factors from QR-free scaling
  const std::size_t m = 60, n = 40;
  for (double tol : {1e-3, 1e-6, 1e-9}) {
    DenseMatrix a(m, n);
    const DenseMatrix g1 = oracle::normal_matrix(m, n, 11), g2 = oracle::normal_matrix(n, n, 12);
    DenseMatrix scaled = g1;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < n; ++k) scaled(i, k) *= std::pow(10.0, -0.5 * static_cast<double>(k));
    a = oracle::product(scaled, g2);
    const IdResult id = pivoted_qr_id(a, tol, n);
    CHECK(id_residual(a, id) <= 10.0 * tol);
    check_identity_on_skeleton(id);
  }
}

TEST_CASE("ID respects max_rank and flags zero input") {
  const IdResult capped = pivoted_qr_id(oracle::normal_matrix(20, 20, 1), 1e-12, 5);
  CHECK(capped.rank == 5);
  const IdResult zero = pivoted_qr_id(DenseMatrix(4, 6), 1e-6, 3);
  CHECK(zero.degenerate);
  CHECK(zero.rank == 1);
  CHECK(zero.skel.size() == 1);
  CHECK_THROWS_AS(pivoted_qr_id(DenseMatrix(3, 3, 1.0), 0.0, 3), InvalidArgument);
  CHECK_THROWS_AS(pivoted_qr_id(DenseMatrix(3, 3, 1.0), 1e-6, 0), InvalidArgument);
  CHECK_THROWS_AS(pivoted_qr_id(DenseMatrix(0, 3), 1e-6, 3), InvalidArgument);
}

TEST_CASE("dense factor small examples") {
  const DenseFactor id = DenseFactor::factor(DenseMatrix::identity(3), FactorKind::cholesky);
  const DenseMatrix b = oracle::normal_matrix(3, 2, 4);
  CHECK(id.solve(b) == b);

  DenseMatrix d(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 4.0;
  DenseMatrix rhs(2, 1);
  rhs(0, 0) = 2.0;
  rhs(1, 0) = 4.0;
  for (FactorKind kind : {FactorKind::cholesky, FactorKind::lu}) {
    const DenseMatrix x = DenseFactor::factor(d, kind).solve(rhs);
    CHECK(x(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(x(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(id.solve(DenseMatrix(3, 0)).cols() == 0);
  CHECK_THROWS_AS(id.solve(DenseMatrix(4, 1)), InvalidArgument);
}

TEST_CASE("dense factor residuals") {
  const std::size_t n = 50;
  const DenseMatrix a = spd(n, 9);
  const DenseMatrix b = oracle::normal_matrix(n, 3, 10);
  for (FactorKind kind : {FactorKind::cholesky, FactorKind::lu}) {
    const DenseFactor f = DenseFactor::factor(a, kind);
    const DenseMatrix x = f.solve(b);
    CHECK((oracle::product(a, x) - b).frobenius_norm() / b.frobenius_norm() <= 1e-12);
    const DenseMatrix inv_a = f.solve(a);
    CHECK((inv_a - DenseMatrix::identity(n)).max_abs() <= 1e-10);
    for (std::size_t j = 0; j < 3; ++j) {
      std::vector<double> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = b(i, j);
      const DenseMatrix xj = f.solve(DenseMatrix::column(col));
      for (std::size_t i = 0; i < n; ++i) CHECK(xj(i, 0) == x(i, j));
    }
  }
}

TEST_CASE("LU handles nonsymmetric systems and transposes") {
  const std::size_t n = 30;
  DenseMatrix a = oracle::normal_matrix(n, n, 20);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += 10.0;
  const DenseFactor f = DenseFactor::factor(a, FactorKind::lu);
  const DenseMatrix b = oracle::normal_matrix(n, 2, 21);
  const DenseMatrix x = f.solve(b), xt = f.solve_transposed(b);
  CHECK((oracle::product(a, x) - b).frobenius_norm() <= 1e-12 * b.frobenius_norm());
  CHECK((oracle::product(a.transposed(), xt) - b).frobenius_norm() <= 1e-12 * b.frobenius_norm());
  std::vector<double> col(n);
  for (std::size_t i = 0; i < n; ++i) col[i] = b(i, 0);
  const auto ref = oracle::gauss_solve(a, col);
  for (std::size_t i = 0; i < n; ++i) CHECK(x(i, 0) == doctest::Approx(ref[i]).epsilon(1e-10));
}

TEST_CASE("factor failures") {
  DenseMatrix indefinite(2, 2);
  indefinite(0, 0) = 1.0;
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(DenseFactor::factor(indefinite, FactorKind::cholesky), NotSpdError);
  bool fell_back = false;
  const DenseFactor f = DenseFactor::factor_spd_or_lu(indefinite, &fell_back);
  CHECK(fell_back);
  CHECK(f.kind() == FactorKind::lu);
  DenseMatrix singular(3, 3, 1.0);
  CHECK_THROWS_AS(DenseFactor::factor(singular, FactorKind::lu), SingularMatrixError);
  CHECK_THROWS_AS(DenseFactor::factor(DenseMatrix(2, 3), FactorKind::lu), InvalidArgument);
}

TEST_CASE("condition estimate is a tight lower bound") {
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    DenseMatrix a = oracle::normal_matrix(25, 25, seed);
    for (std::size_t i = 0; i < 25; ++i) a(i, i) += 2.0;
    const DenseFactor f = DenseFactor::factor(a, FactorKind::lu);
    const double exact = a.norm1() * f.solve(DenseMatrix::identity(25)).norm1();
    CHECK(f.condition_estimate() <= exact * (1.0 + 1e-10));
    CHECK(f.condition_estimate() >= 0.1 * exact);
  }
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hits(1000, 0);
  parallel_for(1000, 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw NumericalError("x"); }),
                  NumericalError);
}

TEST_CASE("SplitMix64 is reproducible and split streams differ") {
  SplitMix64 a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
  CHECK(SplitMix64(5).split(1)() != SplitMix64(5).split(2)());
  SplitMix64 c(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
