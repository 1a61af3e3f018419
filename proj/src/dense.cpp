#include "kernelsolve/dense.hpp"

#include <algorithm>
#include <cmath>

#include "kernelsolve/error.hpp"

namespace kernelsolve {

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::column(std::span<const double> v) {
  DenseMatrix m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix DenseMatrix::row_block(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) throw InvalidArgument("row_block: range out of bounds");
  DenseMatrix b(end - begin, cols_);
  std::copy(data_.begin() + begin * cols_, data_.begin() + end * cols_, b.data());
  return b;
}

void DenseMatrix::set_row_block(std::size_t begin, const DenseMatrix& block) {
  if (block.cols_ != cols_ || begin + block.rows_ > rows_)
    throw InvalidArgument("set_row_block: shape mismatch");
  std::copy(block.data_.begin(), block.data_.end(), data_.begin() + begin * cols_);
}

DenseMatrix DenseMatrix::select_columns(std::span<const std::size_t> cols) const {
  DenseMatrix out(rows_, cols.size());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = (*this)(i, cols[j]);
  return out;
}

double DenseMatrix::frobenius_norm() const { return norm2(data_); }

double DenseMatrix::norm1() const {
  std::vector<double> colsum(cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) colsum[j] += std::abs((*this)(i, j));
  return colsum.empty() ? 0.0 : *std::max_element(colsum.begin(), colsum.end());
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw InvalidArgument("matrix add: shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw InvalidArgument("matrix sub: shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double alpha) {
  for (double& v : data_) v *= alpha;
  return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }

// The three products below accumulate in a fixed k order per output entry,
// so results are reproducible regardless of caller threading.

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("matmul: inner dimension mismatch");
  const std::size_t m = a.rows(), n = b.cols(), p = a.cols();
  DenseMatrix c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.data() + i * n;
    const double* ai = a.data() + i * p;
    for (std::size_t k = 0; k < p; ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = b.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw InvalidArgument("matmul_tn: inner dimension mismatch");
  const std::size_t m = a.cols(), n = b.cols(), p = a.rows();
  DenseMatrix c(m, n);
  for (std::size_t k = 0; k < p; ++k) {
    const double* ak = a.data() + k * m;
    const double* bk = b.data() + k * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      double* ci = c.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("matmul_nt: inner dimension mismatch");
  const std::size_t m = a.rows(), n = b.rows();
  DenseMatrix c(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c(i, j) = dot(a.row(i), b.row(j));
  return c;
}

DenseMatrix vstack(const DenseMatrix& top, const DenseMatrix& bottom) {
  if (top.cols() != bottom.cols()) throw InvalidArgument("vstack: column mismatch");
  DenseMatrix out(top.rows() + bottom.rows(), top.cols());
  std::copy(top.data(), top.data() + top.size(), out.data());
  std::copy(bottom.data(), bottom.data() + bottom.size(), out.data() + top.size());
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm2(std::span<const double> a) {
  // scaled to avoid overflow on large entries
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double v : a) {
    const double t = v / scale;
    s += t * t;
  }
  return scale * std::sqrt(s);
}

}  // namespace kernelsolve
