#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "risp/complex_matrix.hpp"
#include "risp/errors.hpp"
#include "risp/masks.hpp"
#include "risp/random.hpp"

namespace risp {

// ---------------------------------------------------------------------------
// real tensors

struct DenseParam {
  std::size_t rows = 0, cols = 0;
  std::vector<double> w;  // row-major

  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    w.assign(r * c, 0.0);
  }
};

inline void matvec(const DenseParam& p, const double* x, double* y, bool accum) {
  for (std::size_t r = 0; r < p.rows; ++r) {
    double s = accum ? y[r] : 0.0;
    const double* row = p.w.data() + r * p.cols;
    for (std::size_t c = 0; c < p.cols; ++c) s += row[c] * x[c];
    y[r] = s;
  }
}

inline void matvec_t(const DenseParam& p, const double* gy, double* gx, bool accum) {
  if (!accum)
    for (std::size_t c = 0; c < p.cols; ++c) gx[c] = 0.0;
  for (std::size_t r = 0; r < p.rows; ++r) {
    const double* row = p.w.data() + r * p.cols;
    for (std::size_t c = 0; c < p.cols; ++c) gx[c] += row[c] * gy[r];
  }
}

/// gW += gy x^T
inline void ger(DenseParam& g, const double* gy, const double* x) {
  for (std::size_t r = 0; r < g.rows; ++r) {
    double* row = g.w.data() + r * g.cols;
    for (std::size_t c = 0; c < g.cols; ++c) row[c] += gy[r] * x[c];
  }
}

// ---------------------------------------------------------------------------
// parameters

struct LstmParams {
  std::size_t in = 0, cells = 0;
  DenseParam Wfz, Wfu, Wqz, Wqu, Wiz, Wiu, Woz, Wou;
  std::vector<double> bf, bq, bi, bo;

  void resize(std::size_t n_in, std::size_t n_cells) {
    in = n_in;
    cells = n_cells;
    for (DenseParam* p : {&Wfz, &Wqz, &Wiz, &Woz}) p->resize(cells, in);
    for (DenseParam* p : {&Wfu, &Wqu, &Wiu, &Wou}) p->resize(cells, cells);
    bf.assign(cells, 0.0);
    bq.assign(cells, 0.0);
    bi.assign(cells, 0.0);
    bo.assign(cells, 0.0);
  }
};

/// All trainables of the network: masked G-layer and h-layer (shared across
/// users), plus the user-shared LSTM block (6N cells, 4N cells, dense 2N).
struct SclstmParams {
  std::size_t M = 0, N = 0, K = 0, S = 0;
  SparseMask g_mask, h_mask;
  std::vector<double> g_w, g_b;  // 4MN nnz, 2MN bias
  std::vector<double> h_w, h_b;  // 4MN nnz, 2N bias
  LstmParams l1, l2;             // 2N -> 6N -> 4N
  DenseParam Wd;                 // 2N x 4N
  std::vector<double> bd;

  void resize(std::size_t M_, std::size_t N_, std::size_t K_, std::size_t S_) {
    M = M_;
    N = N_;
    K = K_;
    S = S_;
    auto [gm, hm] = build_masks(M, N);
    g_mask = gm;
    h_mask = hm;
    g_w.assign(g_mask.nnz(), 0.0);
    g_b.assign(g_mask.rows, 0.0);
    h_w.assign(h_mask.nnz(), 0.0);
    h_b.assign(h_mask.rows, 0.0);
    l1.resize(2 * N, 6 * N);
    l2.resize(6 * N, 4 * N);
    Wd.resize(2 * N, 4 * N);
    bd.assign(2 * N, 0.0);
  }
};

/// Apply `f(name, vector<double>&)` to every parameter tensor, fixed order.
template <typename P, typename F>
void visit_params(P&& p, F&& f) {
  f("g_w", p.g_w);
  f("g_b", p.g_b);
  f("h_w", p.h_w);
  f("h_b", p.h_b);
  auto lstm = [&](const std::string& tag, auto& l) {
    f(tag + ".Wfz", l.Wfz.w);
    f(tag + ".Wfu", l.Wfu.w);
    f(tag + ".Wqz", l.Wqz.w);
    f(tag + ".Wqu", l.Wqu.w);
    f(tag + ".Wiz", l.Wiz.w);
    f(tag + ".Wiu", l.Wiu.w);
    f(tag + ".Woz", l.Woz.w);
    f(tag + ".Wou", l.Wou.w);
    f(tag + ".bf", l.bf);
    f(tag + ".bq", l.bq);
    f(tag + ".bi", l.bi);
    f(tag + ".bo", l.bo);
  };
  lstm("l1", p.l1);
  lstm("l2", p.l2);
  f("Wd", p.Wd.w);
  f("bd", p.bd);
}

inline std::size_t count_trainable_params(const SclstmParams& p) {
  std::size_t n = 0;
  visit_params(const_cast<SclstmParams&>(p),
               [&](const std::string&, std::vector<double>& v) { n += v.size(); });
  return n;
}

inline SclstmParams make_zero_like(const SclstmParams& p) {
  SclstmParams g;
  g.resize(p.M, p.N, p.K, p.S);
  return g;
}

inline SclstmParams init_sclstm(std::size_t M, std::size_t N, std::size_t K,
                                std::size_t S, Rng& rng) {
  SclstmParams p;
  p.resize(M, N, K, S);
  // masked Glorot: fan-in/out are the mask degrees (2 each for the G-layer;
  // 2M in / 2 out for the h-layer)
  const double g_lim = std::sqrt(6.0 / 4.0);
  for (double& w : p.g_w) w = rng.uniform(-g_lim, g_lim);
  const double h_lim = std::sqrt(6.0 / (2.0 * static_cast<double>(M) + 2.0));
  for (double& w : p.h_w) w = rng.uniform(-h_lim, h_lim);
  auto glorot = [&](DenseParam& d) {
    const double lim = std::sqrt(6.0 / static_cast<double>(d.rows + d.cols));
    for (double& w : d.w) w = rng.uniform(-lim, lim);
  };
  for (LstmParams* l : {&p.l1, &p.l2}) {
    glorot(l->Wfz);
    glorot(l->Wfu);
    glorot(l->Wqz);
    glorot(l->Wqu);
    glorot(l->Wiz);
    glorot(l->Wiu);
    glorot(l->Woz);
    glorot(l->Wou);
    for (double& b : l->bf) b = 1.0;  // open forget gates at the start
  }
  glorot(p.Wd);
  return p;
}

// ---------------------------------------------------------------------------
// stacking helpers (Re at n*M+m column-major, Im offset by MN)

inline std::vector<double> stack_complex(const ComplexMatrix& a) {
  const std::size_t M = a.rows(), N = a.cols();
  std::vector<double> v(2 * M * N);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t m = 0; m < M; ++m) {
      v[stack_re_index(m, n, M)] = a(m, n).real();
      v[stack_im_index(m, n, M, N)] = a(m, n).imag();
    }
  }
  return v;
}

inline ComplexMatrix unstack_matrix(const double* v, std::size_t M, std::size_t N) {
  ComplexMatrix a(M, N);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t m = 0; m < M; ++m)
      a(m, n) = cplx(v[stack_re_index(m, n, M)], v[stack_im_index(m, n, M, N)]);
  return a;
}

inline ComplexMatrix unstack_vector(const double* v, std::size_t N) {
  ComplexMatrix h(N, 1);
  for (std::size_t n = 0; n < N; ++n) h(n, 0) = cplx(v[n], v[N + n]);
  return h;
}

/// Elementwise mean of all K*S stacked inputs (the G-layer feed).
inline std::vector<double> g_layer_input(const std::vector<std::vector<double>>& slices) {
  if (slices.empty()) throw InvalidInputError("g_layer_input: empty history");
  std::vector<double> avg(slices[0].size(), 0.0);
  for (const auto& s : slices) {
    if (s.size() != avg.size()) throw DimensionError("g_layer_input: slice size");
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += s[i];
  }
  const double inv = 1.0 / static_cast<double>(slices.size());
  for (double& x : avg) x *= inv;
  return avg;
}

// ---------------------------------------------------------------------------
// forward

struct LstmCache {
  // per step: input and all gate activations
  std::vector<std::vector<double>> z, f, i, o, qt, q, u, tq;
  void resize(std::size_t S) {
    for (auto* v : {&z, &f, &i, &o, &qt, &q, &u, &tq}) v->assign(S, {});
  }
};

inline void lstm_step(const LstmParams& p, const std::vector<double>& z,
                      const double* u_prev, const double* q_prev, LstmCache& c,
                      std::size_t s) {
  const std::size_t n = p.cells;
  auto gate = [&](const DenseParam& Wz, const DenseParam& Wu,
                  const std::vector<double>& b) {
    std::vector<double> a(b);
    matvec(Wz, z.data(), a.data(), true);
    if (u_prev) matvec(Wu, u_prev, a.data(), true);
    return a;
  };
  std::vector<double> af = gate(p.Wfz, p.Wfu, p.bf);
  std::vector<double> aq = gate(p.Wqz, p.Wqu, p.bq);
  std::vector<double> ai = gate(p.Wiz, p.Wiu, p.bi);
  std::vector<double> ao = gate(p.Woz, p.Wou, p.bo);
  c.z[s] = z;
  c.f[s].resize(n);
  c.qt[s].resize(n);
  c.i[s].resize(n);
  c.o[s].resize(n);
  c.q[s].resize(n);
  c.u[s].resize(n);
  c.tq[s].resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double f = 1.0 / (1.0 + std::exp(-af[j]));
    const double qt = std::tanh(aq[j]);
    const double i = 1.0 / (1.0 + std::exp(-ai[j]));
    const double o = 1.0 / (1.0 + std::exp(-ao[j]));
    const double q = qt * i + (q_prev ? q_prev[j] : 0.0) * f;
    const double tq = std::tanh(q);
    c.f[s][j] = f;
    c.qt[s][j] = qt;
    c.i[s][j] = i;
    c.o[s][j] = o;
    c.q[s][j] = q;
    c.tq[s][j] = tq;
    c.u[s][j] = tq * o;
  }
}

struct ForwardCache {
  std::vector<double> avg;                             // 2MN
  std::vector<double> g_out;                           // 2MN stacked G~
  std::vector<std::vector<std::vector<double>>> hbar;  // [K][S] 2N
  std::vector<LstmCache> c1, c2;                       // per user
  std::vector<std::vector<double>> h_out;              // [K] 2N stacked h~_k
};

struct SclstmOutput {
  ComplexMatrix G;                // M x N
  std::vector<ComplexMatrix> h;   // [K] N x 1
  std::vector<ComplexMatrix> H;   // [K] M x N
};

/// Full forward pass. `input` is the per-sample stack: K users x S steps x
/// 2MN reals, user-major then step-major.
inline SclstmOutput sclstm_forward(const SclstmParams& p, const double* input,
                                   ForwardCache* fc = nullptr) {
  const std::size_t M = p.M, N = p.N, K = p.K, S = p.S;
  const std::size_t slice = 2 * M * N;
  ForwardCache local;
  ForwardCache& c = fc ? *fc : local;

  std::vector<std::vector<double>> slices;
  slices.reserve(K * S);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t s = 0; s < S; ++s) {
      const double* x = input + (k * S + s) * slice;
      slices.emplace_back(x, x + slice);
    }
  c.avg = g_layer_input(slices);
  c.g_out.assign(2 * M * N, 0.0);
  sparse_forward(p.g_mask, p.g_w, p.g_b, c.avg.data(), c.g_out.data());

  c.hbar.assign(K, std::vector<std::vector<double>>(S));
  c.c1.assign(K, {});
  c.c2.assign(K, {});
  c.h_out.assign(K, {});
  SclstmOutput out;
  out.G = unstack_matrix(c.g_out.data(), M, N);
  for (std::size_t k = 0; k < K; ++k) {
    c.c1[k].resize(S);
    c.c2[k].resize(S);
    for (std::size_t s = 0; s < S; ++s) {
      const double* x = input + (k * S + s) * slice;
      c.hbar[k][s].assign(2 * N, 0.0);
      sparse_forward(p.h_mask, p.h_w, p.h_b, x, c.hbar[k][s].data());
      const double* u1p = s ? c.c1[k].u[s - 1].data() : nullptr;
      const double* q1p = s ? c.c1[k].q[s - 1].data() : nullptr;
      lstm_step(p.l1, c.hbar[k][s], u1p, q1p, c.c1[k], s);
      const double* u2p = s ? c.c2[k].u[s - 1].data() : nullptr;
      const double* q2p = s ? c.c2[k].q[s - 1].data() : nullptr;
      lstm_step(p.l2, c.c1[k].u[s], u2p, q2p, c.c2[k], s);
    }
    c.h_out[k].assign(2 * N, 0.0);
    for (std::size_t r = 0; r < 2 * N; ++r) c.h_out[k][r] = p.bd[r];
    matvec(p.Wd, c.c2[k].u[S - 1].data(), c.h_out[k].data(), true);
    out.h.push_back(unstack_vector(c.h_out[k].data(), N));
    out.H.push_back(cascade(out.G, out.h.back()));
  }
  return out;
}

/// Eq-style MSE over a batch of outputs: (1/B) sum_b sum_k ||H~ - H||^2.
inline double loss_mse(const std::vector<SclstmOutput>& outs,
                       const std::vector<std::vector<ComplexMatrix>>& targets) {
  if (outs.empty() || outs.size() != targets.size()) {
    throw DimensionError("loss_mse: batch size mismatch");
  }
  double s = 0.0;
  for (std::size_t b = 0; b < outs.size(); ++b) {
    for (std::size_t k = 0; k < outs[b].H.size(); ++k) {
      s += (outs[b].H[k] - targets[b][k]).frobenius_norm_sq();
    }
  }
  return s / static_cast<double>(outs.size());
}

// ---------------------------------------------------------------------------
// backward

namespace detail {

inline void lstm_backward(const LstmParams& p, const LstmCache& c, std::size_t S,
                          const std::vector<std::vector<double>>& ext_gu,
                          LstmParams& g, std::vector<std::vector<double>>* gz_out) {
  const std::size_t n = p.cells;
  std::vector<double> gu_carry(n, 0.0), gq_carry(n, 0.0);
  std::vector<double> ga_f(n), ga_q(n), ga_i(n), ga_o(n);
  if (gz_out) gz_out->assign(S, std::vector<double>(p.in, 0.0));
  for (std::size_t s = S; s-- > 0;) {
    for (std::size_t j = 0; j < n; ++j) {
      double gu = gu_carry[j];
      if (!ext_gu[s].empty()) gu += ext_gu[s][j];
      const double f = c.f[s][j], i = c.i[s][j], o = c.o[s][j];
      const double qt = c.qt[s][j], tq = c.tq[s][j];
      const double q_prev = s ? c.q[s - 1][j] : 0.0;
      const double go = gu * tq;
      const double gq = gu * o * (1.0 - tq * tq) + gq_carry[j];
      const double gqt = gq * i;
      const double gi = gq * qt;
      const double gf = gq * q_prev;
      gq_carry[j] = gq * f;
      ga_f[j] = gf * f * (1.0 - f);
      ga_i[j] = gi * i * (1.0 - i);
      ga_o[j] = go * o * (1.0 - o);
      ga_q[j] = gqt * (1.0 - qt * qt);
    }
    const double* z = c.z[s].data();
    ger(g.Wfz, ga_f.data(), z);
    ger(g.Wqz, ga_q.data(), z);
    ger(g.Wiz, ga_i.data(), z);
    ger(g.Woz, ga_o.data(), z);
    if (s) {
      const double* up = c.u[s - 1].data();
      ger(g.Wfu, ga_f.data(), up);
      ger(g.Wqu, ga_q.data(), up);
      ger(g.Wiu, ga_i.data(), up);
      ger(g.Wou, ga_o.data(), up);
    }
    for (std::size_t j = 0; j < n; ++j) {
      g.bf[j] += ga_f[j];
      g.bq[j] += ga_q[j];
      g.bi[j] += ga_i[j];
      g.bo[j] += ga_o[j];
    }
    if (gz_out) {
      double* gz = (*gz_out)[s].data();
      matvec_t(p.Wfz, ga_f.data(), gz, true);
      matvec_t(p.Wqz, ga_q.data(), gz, true);
      matvec_t(p.Wiz, ga_i.data(), gz, true);
      matvec_t(p.Woz, ga_o.data(), gz, true);
    }
    std::vector<double> gu_next(n, 0.0);
    matvec_t(p.Wfu, ga_f.data(), gu_next.data(), true);
    matvec_t(p.Wqu, ga_q.data(), gu_next.data(), true);
    matvec_t(p.Wiu, ga_i.data(), gu_next.data(), true);
    matvec_t(p.Wou, ga_o.data(), gu_next.data(), true);
    gu_carry = std::move(gu_next);
  }
}

}  // namespace detail

/// Accumulate dL/d(params) for one sample of a batch of size B into `g`
/// (loss = (1/B) sum over the batch of sum_k ||H~ - H||^2).
inline void sclstm_backward(const SclstmParams& p, const double* input,
                            const ForwardCache& c, const SclstmOutput& out,
                            const std::vector<ComplexMatrix>& target,
                            double inv_batch, SclstmParams& g) {
  const std::size_t M = p.M, N = p.N, K = p.K, S = p.S;
  const std::size_t MN = M * N;
  if (target.size() != K) throw DimensionError("sclstm_backward: target count");

  // recombination H~[m,n] = G~[m,n] h~[n]: route the residual into the stacked
  // G~ gradient (shared over users) and each user's stacked h~ gradient
  std::vector<double> gG(2 * MN, 0.0);
  std::vector<std::vector<double>> gh(K, std::vector<double>(2 * N, 0.0));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t n = 0; n < N; ++n) {
      const double hre = out.h[k](n, 0).real();
      const double him = out.h[k](n, 0).imag();
      for (std::size_t m = 0; m < M; ++m) {
        const cplx d = out.H[k](m, n) - target[k](m, n);
        const double dre = 2.0 * inv_batch * d.real();
        const double dim = 2.0 * inv_batch * d.imag();
        const double Gre = out.G(m, n).real();
        const double Gim = out.G(m, n).imag();
        gG[stack_re_index(m, n, M)] += dre * hre + dim * him;
        gG[stack_im_index(m, n, M, N)] += -dre * him + dim * hre;
        gh[k][n] += dre * Gre + dim * Gim;
        gh[k][N + n] += -dre * Gim + dim * Gre;
      }
    }
  }

  sparse_backward(p.g_mask, c.avg.data(), gG.data(), g.g_w, g.g_b);

  const std::size_t slice = 2 * MN;
  for (std::size_t k = 0; k < K; ++k) {
    // dense head
    std::vector<double> gu2(4 * N, 0.0);
    matvec_t(p.Wd, gh[k].data(), gu2.data(), true);
    ger(g.Wd, gh[k].data(), c.c2[k].u[S - 1].data());
    for (std::size_t r = 0; r < 2 * N; ++r) g.bd[r] += gh[k][r];

    // second LSTM: external grad only at the final step
    std::vector<std::vector<double>> ext2(S);
    ext2[S - 1] = gu2;
    std::vector<std::vector<double>> gz2;
    detail::lstm_backward(p.l2, c.c2[k], S, ext2, g.l2, &gz2);

    // first LSTM: gz2[s] is the external grad on u1(s)
    std::vector<std::vector<double>> gz1;
    detail::lstm_backward(p.l1, c.c1[k], S, gz2, g.l1, &gz1);

    for (std::size_t s = 0; s < S; ++s) {
      const double* x = input + (k * S + s) * slice;
      sparse_backward(p.h_mask, x, gz1[s].data(), g.h_w, g.h_b);
    }
  }
}

}  // namespace risp
