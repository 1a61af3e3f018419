#include "kernelsolve/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

#include "kernelsolve/error.hpp"

namespace kernelsolve {

namespace {

// Downdated column norms below this fraction of their last exact value are recomputed.
constexpr double kNormRecomputeRatio = 0.1;

IdResult degenerate_id(std::size_t cols) {
  IdResult id;
  id.rank = 1;
  id.skel = {0};
  id.coeff = DenseMatrix(1, cols);
  id.coeff(0, 0) = 1.0;
  id.degenerate = true;
  id.max_abs_coeff = 1.0;
  return id;
}

}  // namespace

IdResult pivoted_qr_id(const DenseMatrix& a, double tol, std::size_t max_rank) {
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("pivoted_qr_id: tol must lie in (0, 1)");
  if (max_rank < 1) throw InvalidArgument("pivoted_qr_id: max_rank must be >= 1");
  const std::size_t m = a.rows(), n = a.cols();
  if (m == 0 || n == 0) throw InvalidArgument("pivoted_qr_id: empty matrix");
  if (!a.all_finite()) throw InvalidArgument("pivoted_qr_id: non-finite entries");

  // column-major working copy; column j occupies w[j*m, (j+1)*m)
  std::vector<double> w(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) w[j * m + i] = a(i, j);
  auto col = [&](std::size_t j) { return w.data() + j * m; };

  std::vector<std::size_t> piv(n);
  std::iota(piv.begin(), piv.end(), 0);
  std::vector<double> vn(n), vref(n);
  for (std::size_t j = 0; j < n; ++j) vn[j] = vref[j] = norm2({col(j), m});

  const std::size_t kmax = std::min({max_rank, m, n});
  std::size_t rank = kmax;
  double r00 = 0.0;

  for (std::size_t k = 0; k < kmax; ++k) {
    std::size_t p = k;
    for (std::size_t j = k + 1; j < n; ++j)
      if (vn[j] > vn[p]) p = j;
    if (p != k) {
      std::swap_ranges(col(k), col(k) + m, col(p));
      std::swap(vn[k], vn[p]);
      std::swap(vref[k], vref[p]);
      std::swap(piv[k], piv[p]);
    }

    double* ck = col(k);
    const double alpha = norm2({ck + k, m - k});
    if (k == 0) {
      r00 = alpha;
      if (r00 == 0.0) return degenerate_id(n);
    } else if (alpha <= tol * r00) {
      rank = k;
      break;
    }

    // Householder reflector H = I - tau v v^T mapping ck[k:] to beta e_0.
    const double x0 = ck[k];
    const double beta = x0 >= 0.0 ? -alpha : alpha;
    ck[k] = x0 - beta;
    double vv = 0.0;
    for (std::size_t i = k; i < m; ++i) vv += ck[i] * ck[i];
    const double tau = vv > 0.0 ? 2.0 / vv : 0.0;

    for (std::size_t j = k + 1; j < n; ++j) {
      double* cj = col(j);
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += ck[i] * cj[i];
      s *= tau;
      for (std::size_t i = k; i < m; ++i) cj[i] -= s * ck[i];

      const double t = cj[k];
      vn[j] = std::sqrt(std::max(0.0, vn[j] * vn[j] - t * t));
      if (vn[j] < kNormRecomputeRatio * vref[j]) {
        vn[j] = k + 1 < m ? norm2({cj + k + 1, m - k - 1}) : 0.0;
        vref[j] = vn[j];
      }
    }
    ck[k] = beta;
    std::fill(ck + k + 1, ck + m, 0.0);
  }

  IdResult id;
  id.rank = rank;
  id.skel.assign(piv.begin(), piv.begin() + rank);
  id.coeff = DenseMatrix(rank, n);
  for (std::size_t k = 0; k < rank; ++k) id.coeff(k, piv[k]) = 1.0;

  // T = R11^-1 R12 by back substitution, one column of R12 at a time.
  std::vector<double> t(rank);
  for (std::size_t j = rank; j < n; ++j) {
    const double* cj = col(j);
    for (std::size_t ii = rank; ii-- > 0;) {
      double s = cj[ii];
      for (std::size_t kk = ii + 1; kk < rank; ++kk) s -= col(kk)[ii] * t[kk];
      t[ii] = s / col(ii)[ii];
    }
    for (std::size_t k = 0; k < rank; ++k) id.coeff(k, piv[j]) = t[k];
  }
  id.max_abs_coeff = id.coeff.max_abs();
  return id;
}

DenseFactor DenseFactor::factor(DenseMatrix a, FactorKind kind) {
  if (a.rows() != a.cols()) throw InvalidArgument("dense_factor: matrix must be square");
  if (!a.all_finite()) throw InvalidArgument("dense_factor: non-finite entries");
  const std::size_t n = a.rows();
  DenseFactor f;
  f.kind_ = kind;
  f.norm1_ = a.norm1();

  if (kind == FactorKind::cholesky) {
    // lower triangle of `a` is overwritten by L; upper triangle is zeroed
    for (std::size_t j = 0; j < n; ++j) {
      const auto lj = a.row(j);
      double d = a(j, j) - dot(lj.first(j), lj.first(j));
      if (!(d > 0.0)) throw NotSpdError("cholesky: non-positive pivot at row " + std::to_string(j));
      const double ljj = std::sqrt(d);
      a(j, j) = ljj;
      for (std::size_t i = j + 1; i < n; ++i) {
        const auto li = a.row(i);
        a(i, j) = (a(i, j) - dot(li.first(j), lj.first(j))) / ljj;
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) a(i, j) = 0.0;
  } else {
    f.pivots_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      for (std::size_t i = k + 1; i < n; ++i)
        if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
      if (a(p, k) == 0.0) throw SingularMatrixError("lu: exactly singular at column " + std::to_string(k));
      f.pivots_[k] = p;
      if (p != k) std::swap_ranges(a.row(k).begin(), a.row(k).end(), a.row(p).begin());
      const double akk = a(k, k);
      const auto rk = a.row(k);
      for (std::size_t i = k + 1; i < n; ++i) {
        const double l = a(i, k) / akk;
        a(i, k) = l;
        if (l == 0.0) continue;
        auto ri = a.row(i);
        for (std::size_t j = k + 1; j < n; ++j) ri[j] -= l * rk[j];
      }
    }
  }
  f.packed_ = std::move(a);
  return f;
}

DenseFactor DenseFactor::factor_spd_or_lu(const DenseMatrix& a, bool* fell_back) {
  if (fell_back) *fell_back = false;
  try {
    return factor(a, FactorKind::cholesky);
  } catch (const NotSpdError&) {
    if (fell_back) *fell_back = true;
    return factor(a, FactorKind::lu);
  }
}

DenseMatrix DenseFactor::solve(const DenseMatrix& b) const {
  if (b.rows() != size()) throw InvalidArgument("dense_solve: right-hand side has wrong row count");
  DenseMatrix x = b;
  solve_in_place(x, false);
  return x;
}

DenseMatrix DenseFactor::solve_transposed(const DenseMatrix& b) const {
  if (b.rows() != size()) throw InvalidArgument("dense_solve: right-hand side has wrong row count");
  DenseMatrix x = b;
  solve_in_place(x, true);
  return x;
}

void DenseFactor::solve_in_place(DenseMatrix& x, bool transposed) const {
  const std::size_t n = size(), q = x.cols();
  if (q == 0 || n == 0) return;
  const DenseMatrix& f = packed_;
  auto axpy = [q](double alpha, std::span<const double> src, std::span<double> dst) {
    for (std::size_t c = 0; c < q; ++c) dst[c] -= alpha * src[c];
  };
  auto scale = [q](double alpha, std::span<double> dst) {
    for (std::size_t c = 0; c < q; ++c) dst[c] /= alpha;
  };

  if (kind_ == FactorKind::cholesky) {
    // L y = b, then L^T x = y
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < i; ++k) axpy(f(i, k), x.row(k), x.row(i));
      scale(f(i, i), x.row(i));
    }
    for (std::size_t i = n; i-- > 0;) {
      scale(f(i, i), x.row(i));
      for (std::size_t k = 0; k < i; ++k) axpy(f(i, k), x.row(i), x.row(k));
    }
    return;
  }

  if (!transposed) {
    for (std::size_t k = 0; k < n; ++k)
      if (pivots_[k] != k) std::swap_ranges(x.row(k).begin(), x.row(k).end(), x.row(pivots_[k]).begin());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < i; ++k) axpy(f(i, k), x.row(k), x.row(i));
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t k = i + 1; k < n; ++k) axpy(f(i, k), x.row(k), x.row(i));
      scale(f(i, i), x.row(i));
    }
  } else {
    // A = P^T L U, so A^T x = b is U^T L^T P x = b
    for (std::size_t i = 0; i < n; ++i) {
      scale(f(i, i), x.row(i));
      for (std::size_t k = i + 1; k < n; ++k) axpy(f(i, k), x.row(i), x.row(k));
    }
    for (std::size_t i = n; i-- > 0;)
      for (std::size_t k = 0; k < i; ++k) axpy(f(i, k), x.row(i), x.row(k));
    for (std::size_t k = n; k-- > 0;)
      if (pivots_[k] != k) std::swap_ranges(x.row(k).begin(), x.row(k).end(), x.row(pivots_[k]).begin());
  }
}

double DenseFactor::condition_estimate() const {
  const std::size_t n = size();
  if (n == 0) return 0.0;
  auto norm1v = [](const DenseMatrix& v) {
    double s = 0.0;
    for (double e : v.values()) s += std::abs(e);
    return s;
  };

  DenseMatrix x(n, 1, 1.0 / static_cast<double>(n));
  double est = 0.0;
  std::size_t last = n;
  for (int iter = 0; iter < 5; ++iter) {
    const DenseMatrix y = solve(x);
    est = std::max(est, norm1v(y));
    DenseMatrix sgn(n, 1);
    for (std::size_t i = 0; i < n; ++i) sgn(i, 0) = y(i, 0) >= 0.0 ? 1.0 : -1.0;
    const DenseMatrix z = solve_transposed(sgn);
    std::size_t j = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(z(i, 0)) > std::abs(z(j, 0))) j = i;
    double ztx = 0.0;
    for (std::size_t i = 0; i < n; ++i) ztx += z(i, 0) * x(i, 0);
    if (iter > 0 && (std::abs(z(j, 0)) <= ztx || j == last)) break;
    last = j;
    x = DenseMatrix(n, 1);
    x(j, 0) = 1.0;
  }

  // Higham's alternating test vector guards against the estimator stalling.
  DenseMatrix alt(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = 1.0 + (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0);
    alt(i, 0) = (i % 2 == 0) ? mag : -mag;
  }
  est = std::max(est, 2.0 * norm1v(solve(alt)) / (3.0 * static_cast<double>(n)));
  return norm1_ * est;
}

}  // namespace kernelsolve
