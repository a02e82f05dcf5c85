#pragma once

// Small dense row-major matrix plus a cyclic Jacobi eigensolver. Sized for
// networks of at most a few hundred nodes.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace bqc {

using Vec = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product: dimension mismatch");
    Matrix out(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  friend Vec operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols_ != x.size()) throw std::invalid_argument("matrix-vector product: dimension mismatch");
    Vec out(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < a.cols_; ++j) acc += a(i, j) * x[j];
      out[i] = acc;
    }
    return out;
  }

  friend Matrix operator*(double s, Matrix m) {
    for (auto& v : m.data_) v *= s;
    return m;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("matrix sum: dimension mismatch");
    for (std::size_t i = 0; i < a.data_.size(); ++i) a.data_[i] += b.data_[i];
    return a;
  }

  friend Matrix operator-(Matrix a, const Matrix& b) { return std::move(a) + (-1.0) * b; }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct EigenDecomposition {
  Vec values;     // ascending
  Matrix vectors; // column j pairs with values[j]
};

/// Cyclic Jacobi rotations on a symmetric matrix. Sweeps until the
/// off-diagonal Frobenius mass drops below `tol` relative to the matrix scale.
inline EigenDecomposition jacobi_eigen(Matrix a, double tol = 1e-12, int max_sweeps = 100) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw std::invalid_argument("jacobi_eigen: matrix is not square");
  Matrix v = Matrix::identity(n);

  const double scale = std::max(a.max_abs(), 1.0);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= tol * scale) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  EigenDecomposition out{Vec(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
  }
  return out;
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix from its
/// eigendecomposition; eigenvalues below `cutoff` are treated as zero.
inline Matrix symmetric_pinv(const EigenDecomposition& eig, double cutoff) {
  const std::size_t n = eig.values.size();
  Matrix p(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lam = eig.values[j];
    if (lam <= cutoff) continue;
    for (std::size_t r = 0; r < n; ++r) {
      const double vr = eig.vectors(r, j) / lam;
      for (std::size_t c = 0; c < n; ++c) p(r, c) += vr * eig.vectors(c, j);
    }
  }
  return p;
}

}  // namespace bqc
