#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "risp/complex_matrix.hpp"
#include "risp/errors.hpp"

namespace risp {

/// V[p,q] = exp(-j 2 pi p q / n). Columns are pairwise orthogonal and
/// V^H V = n I; used as the RIS reflection-pattern book.
inline ComplexMatrix dft_matrix(std::size_t n) {
  if (n == 0) throw DimensionError("dft_matrix: n must be >= 1");
  ComplexMatrix v(n, n);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      // reduce p*q mod n before the trig call so large n stay accurate
      const double angle =
          -2.0 * std::numbers::pi * static_cast<double>((p * q) % n) /
          static_cast<double>(n);
      v(p, q) = cplx(std::cos(angle), std::sin(angle));
    }
  }
  return v;
}

/// Square root on the principal branch: Re{w} >= 0, and Im{w} >= 0 on the
/// imaginary axis.
inline cplx principal_sqrt(const cplx& z) {
  cplx w = std::sqrt(z);
  if (w.real() == 0.0 && w.imag() < 0.0) w = -w;
  return w;
}

namespace detail {

/// Householder QR with column pivoting, LAPACK-style storage: R in the upper
/// triangle, reflector tails (v scaled so v0 = 1) below the diagonal.
/// Throws RankDeficiencyError when a pivot falls below rel_tol relative to
/// the first pivot.
inline std::vector<std::size_t> qr_factor(ComplexMatrix& a,
                                          std::vector<double>& taus,
                                          double rel_tol) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < n; ++j) perm[j] = j;
  taus.assign(n, 0.0);

  double first_pivot = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t best = k;
    double best_norm = -1.0;
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += std::norm(a(i, j));
      if (s > best_norm) {
        best_norm = s;
        best = j;
      }
    }
    if (best != k) {
      for (std::size_t i = 0; i < m; ++i) std::swap(a(i, k), a(i, best));
      std::swap(perm[k], perm[best]);
    }

    const double sigma = std::sqrt(std::max(best_norm, 0.0));
    if (k == 0) first_pivot = sigma;
    if (sigma <= rel_tol * first_pivot) {
      throw RankDeficiencyError("ls_solve: matrix is rank deficient", k);
    }

    const cplx x0 = a(k, k);
    const cplx alpha = (std::abs(x0) > 0.0) ? cplx(-(x0 / std::abs(x0)) * sigma)
                                            : cplx(-sigma, 0.0);
    const cplx v0 = x0 - alpha;
    double vtv = std::norm(v0);
    for (std::size_t i = k + 1; i < m; ++i) vtv += std::norm(a(i, k));
    // normalize the reflector so its head is 1; fold |v0|^2 into tau
    for (std::size_t i = k + 1; i < m; ++i) a(i, k) /= v0;
    taus[k] = 2.0 * std::norm(v0) / vtv;
    a(k, k) = alpha;

    for (std::size_t j = k + 1; j < n; ++j) {
      cplx dot = a(k, j);
      for (std::size_t i = k + 1; i < m; ++i) dot += std::conj(a(i, k)) * a(i, j);
      dot *= taus[k];
      a(k, j) -= dot;
      for (std::size_t i = k + 1; i < m; ++i) a(i, j) -= dot * a(i, k);
    }
  }
  return perm;
}

}  // namespace detail

/// Least-squares solve: X minimizing ||A X - B||_F via Householder QR with
/// column pivoting. A must have at least as many rows as columns and full
/// column rank (pivot tolerance 1e-12 relative to the largest pivot).
inline ComplexMatrix ls_solve(const ComplexMatrix& a_in, const ComplexMatrix& b_in) {
  const std::size_t m = a_in.rows();
  const std::size_t n = a_in.cols();
  if (m < n) throw DimensionError("ls_solve: A must have rows >= cols");
  if (b_in.rows() != m) throw DimensionError("ls_solve: B row count mismatch");

  ComplexMatrix a = a_in;
  ComplexMatrix b = b_in;
  std::vector<double> taus;
  const std::vector<std::size_t> perm = detail::qr_factor(a, taus, 1e-12);

  // apply Q^H to B reflector by reflector
  for (std::size_t k = 0; k < n; ++k) {
    if (taus[k] == 0.0) continue;
    for (std::size_t j = 0; j < b.cols(); ++j) {
      cplx dot = b(k, j);
      for (std::size_t i = k + 1; i < m; ++i) dot += std::conj(a(i, k)) * b(i, j);
      dot *= taus[k];
      b(k, j) -= dot;
      for (std::size_t i = k + 1; i < m; ++i) b(i, j) -= dot * a(i, k);
    }
  }

  // back substitution on R x = (Q^H B)(0:n)
  ComplexMatrix x(n, b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t kk = n; kk-- > 0;) {
      cplx s = b(kk, j);
      for (std::size_t l = kk + 1; l < n; ++l) s -= a(kk, l) * x(l, j);
      x(kk, j) = s / a(kk, kk);
    }
  }

  // undo the column permutation
  ComplexMatrix out(n, b.cols());
  for (std::size_t kk = 0; kk < n; ++kk)
    for (std::size_t j = 0; j < b.cols(); ++j) out(perm[kk], j) = x(kk, j);
  return out;
}

}  // namespace risp
