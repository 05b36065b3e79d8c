#pragma once

#include <cstddef>
#include <vector>

#include "risp/errors.hpp"

namespace risp {

/// Fixed sparsity pattern in CSR form; weight vectors are stored aligned with
/// col_idx so off-mask entries never exist.
struct SparseMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // rows + 1
  std::vector<std::size_t> col_idx;  // nnz

  std::size_t nnz() const { return col_idx.size(); }
};

/// Real stacking of an M x N complex matrix: Re at n*M+m (column-major),
/// Im at M*N + n*M+m.
inline std::size_t stack_re_index(std::size_t m, std::size_t n, std::size_t M) {
  return n * M + m;
}
inline std::size_t stack_im_index(std::size_t m, std::size_t n, std::size_t M,
                                  std::size_t N) {
  return M * N + n * M + m;
}

/// Connectivity of the two sparse layers; each has exactly 4MN entries.
/// G-layer (2MN x 2MN): the Re/Im output pair for entry (m,n) sees only the
/// Re/Im input pair for that entry. h-layer (2N x 2MN): the Re/Im output pair
/// for element n sees the Re/Im inputs of the whole column n.
inline std::pair<SparseMask, SparseMask> build_masks(std::size_t M, std::size_t N) {
  if (M < 1 || N < 1) throw DimensionError("build_masks: M, N >= 1");
  const std::size_t MN = M * N;

  SparseMask g;
  g.rows = g.cols = 2 * MN;
  g.row_ptr.assign(g.rows + 1, 0);
  for (std::size_t r = 0; r < g.rows; ++r) {
    const std::size_t base = r % MN;  // shared (m,n) slot of the Re/Im pair
    g.col_idx.push_back(base);
    g.col_idx.push_back(MN + base);
    g.row_ptr[r + 1] = g.col_idx.size();
  }

  SparseMask h;
  h.rows = 2 * N;
  h.cols = 2 * MN;
  h.row_ptr.assign(h.rows + 1, 0);
  for (std::size_t r = 0; r < h.rows; ++r) {
    const std::size_t n = r % N;
    for (std::size_t m = 0; m < M; ++m) h.col_idx.push_back(n * M + m);
    for (std::size_t m = 0; m < M; ++m) h.col_idx.push_back(MN + n * M + m);
    h.row_ptr[r + 1] = h.col_idx.size();
  }
  return {g, h};
}

/// y = W x + b with W's nonzeros stored aligned to mask.col_idx.
inline void sparse_forward(const SparseMask& mask, const std::vector<double>& w,
                           const std::vector<double>& b, const double* x,
                           double* y) {
  if (w.size() != mask.nnz() || b.size() != mask.rows) {
    throw DimensionError("sparse_forward: weight/bias size mismatch");
  }
  for (std::size_t r = 0; r < mask.rows; ++r) {
    double s = b[r];
    for (std::size_t e = mask.row_ptr[r]; e < mask.row_ptr[r + 1]; ++e) {
      s += w[e] * x[mask.col_idx[e]];
    }
    y[r] = s;
  }
}

/// Accumulate weight/bias gradients for y = W x + b given dL/dy.
inline void sparse_backward(const SparseMask& mask, const double* x,
                            const double* gy, std::vector<double>& gw,
                            std::vector<double>& gb) {
  for (std::size_t r = 0; r < mask.rows; ++r) {
    gb[r] += gy[r];
    for (std::size_t e = mask.row_ptr[r]; e < mask.row_ptr[r + 1]; ++e) {
      gw[e] += gy[r] * x[mask.col_idx[e]];
    }
  }
}

}  // namespace risp
