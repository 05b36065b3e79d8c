#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "risp/errors.hpp"

namespace risp {

using cplx = std::complex<double>;

/// Dense complex matrix, row-major. The universal numeric carrier for
/// channels, pilots and network activations. Immutable by convention once
/// returned from an operation; all exported entries are finite.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;

  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {
    if (rows == 0 || cols == 0) {
      throw DimensionError("ComplexMatrix: dimensions must be >= 1");
    }
  }

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::vector<cplx>& data() noexcept { return data_; }
  const std::vector<cplx>& data() const noexcept { return data_; }

  ComplexMatrix transpose() const {
    ComplexMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  ComplexMatrix adjoint() const {
    ComplexMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = std::conj((*this)(i, j));
    return t;
  }

  ComplexMatrix col(std::size_t j) const {
    ComplexMatrix c(rows_, 1);
    for (std::size_t i = 0; i < rows_; ++i) c(i, 0) = (*this)(i, j);
    return c;
  }

  ComplexMatrix row(std::size_t i) const {
    ComplexMatrix r(1, cols_);
    for (std::size_t j = 0; j < cols_; ++j) r(0, j) = (*this)(i, j);
    return r;
  }

  double frobenius_norm_sq() const {
    double s = 0.0;
    for (const cplx& z : data_) s += std::norm(z);
    return s;
  }

  double frobenius_norm() const { return std::sqrt(frobenius_norm_sq()); }

  bool all_finite() const {
    for (const cplx& z : data_) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
  }

  friend ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b) {
    check_same_shape(a, b, "operator+");
    ComplexMatrix r(a.rows_, a.cols_);
    for (std::size_t i = 0; i < a.data_.size(); ++i) r.data_[i] = a.data_[i] + b.data_[i];
    return r;
  }

  friend ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b) {
    check_same_shape(a, b, "operator-");
    ComplexMatrix r(a.rows_, a.cols_);
    for (std::size_t i = 0; i < a.data_.size(); ++i) r.data_[i] = a.data_[i] - b.data_[i];
    return r;
  }

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols_ != b.rows_) {
      throw DimensionError("matmul: inner dimensions disagree");
    }
    ComplexMatrix r(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const cplx aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) r(i, j) += aik * b(k, j);
      }
    }
    return r;
  }

  friend ComplexMatrix operator*(const cplx& s, const ComplexMatrix& a) {
    ComplexMatrix r(a.rows_, a.cols_);
    for (std::size_t i = 0; i < a.data_.size(); ++i) r.data_[i] = s * a.data_[i];
    return r;
  }

  friend ComplexMatrix operator*(const ComplexMatrix& a, const cplx& s) { return s * a; }

  friend bool operator==(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  static void check_same_shape(const ComplexMatrix& a, const ComplexMatrix& b,
                               const char* op) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) {
      throw DimensionError(std::string(op) + ": shape mismatch");
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

/// H = G diag(h): cascaded channel recombination.
inline ComplexMatrix cascade(const ComplexMatrix& g, const ComplexMatrix& h) {
  if (h.cols() != 1 || h.rows() != g.cols()) {
    throw DimensionError("cascade: h must be an N x 1 vector matching G's columns");
  }
  ComplexMatrix out(g.rows(), g.cols());
  for (std::size_t m = 0; m < g.rows(); ++m)
    for (std::size_t n = 0; n < g.cols(); ++n) out(m, n) = g(m, n) * h(n, 0);
  return out;
}

}  // namespace risp
