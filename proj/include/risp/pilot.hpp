#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "risp/channel.hpp"
#include "risp/complex_matrix.hpp"
#include "risp/config.hpp"
#include "risp/errors.hpp"
#include "risp/linalg.hpp"
#include "risp/random.hpp"

namespace risp {

/// Orthogonal user pilots (rows of X satisfy x_i x_j^H = K P delta_ij with
/// P = 1) plus unit-modulus RIS reflection patterns.
struct PilotPlan {
  ComplexMatrix X;                      // K x K, DFT rows
  std::vector<ComplexMatrix> patterns;  // each N x 1, unit modulus
  double pilot_power = 1.0;
};

inline PilotPlan make_pilot_plan(std::size_t K, std::size_t N) {
  PilotPlan plan{dft_matrix(K), {}, 1.0};
  const ComplexMatrix V = dft_matrix(N);
  for (std::size_t j = 0; j < N; ++j) plan.patterns.push_back(V.col(j));
  return plan;
}

/// Pilot-slot accounting (per large coherence block T_L).
inline std::size_t stage1_slots(std::size_t N) { return N; }
inline std::size_t stage2_reference_slots(std::size_t N) { return 2 * (N + 1); }
inline std::size_t patterns_per_step(std::size_t N, std::size_t M) {
  return (N + M - 1) / M;  // ceil(N/M)
}
inline std::size_t stage2_step_slots(std::size_t N, std::size_t M, std::size_t K) {
  return K * patterns_per_step(N, M);
}

/// DFT column used for the j-th per-step slot of the reduced estimator.
/// Strided column selection spreads the patterns over the whole DFT grid,
/// which block-diagonalizes the stacked system into maximally separated
/// groups and markedly improves its typical conditioning compared to taking
/// the first ceil(N/M) columns.
inline std::size_t reduced_pattern_index(std::size_t j, std::size_t N, std::size_t M) {
  const std::size_t J = patterns_per_step(N, M);
  const std::size_t stride = std::max<std::size_t>(1, N / J);
  return (j * stride) % N;
}

inline const ComplexMatrix& reduced_pattern(const PilotPlan& plan, std::size_t j,
                                            std::size_t M) {
  const std::size_t N = plan.patterns.size();
  return plan.patterns[reduced_pattern_index(j, N, M)];
}

/// Uplink received block for one reflection pattern: Y = sum_k H_k v x_k + noise,
/// with x_k the k-th pilot row (length T) and per-entry noise variance sigma2.
inline ComplexMatrix synth_uplink_rx(const std::vector<ComplexMatrix>& H,
                                     const ComplexMatrix& v, const ComplexMatrix& X,
                                     double sigma2, Rng& rng) {
  if (H.empty()) throw DimensionError("synth_uplink_rx: no user channels");
  const std::size_t K = H.size();
  const std::size_t M = H[0].rows();
  const std::size_t N = H[0].cols();
  const std::size_t T = X.cols();
  if (X.rows() != K) throw DimensionError("synth_uplink_rx: pilot rows != K");
  if (v.rows() != N || v.cols() != 1) {
    throw DimensionError("synth_uplink_rx: pattern must be N x 1");
  }
  ComplexMatrix Y = sample_cn(M, T, sigma2, rng);
  for (std::size_t k = 0; k < K; ++k) {
    if (H[k].rows() != M || H[k].cols() != N) {
      throw DimensionError("synth_uplink_rx: user channel shape mismatch");
    }
    ComplexMatrix hv(M, 1);
    for (std::size_t m = 0; m < M; ++m) {
      cplx s = 0.0;
      for (std::size_t n = 0; n < N; ++n) s += H[k](m, n) * v(n, 0);
      hv(m, 0) = s;
    }
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t t = 0; t < T; ++t) Y(m, t) += hv(m, 0) * X(k, t);
  }
  return Y;
}

/// FDA self-reception across patterns: y_t = (g1 elementwise g1) . v_t . x_t + e_t.
inline ComplexMatrix synth_fda_rx(const ComplexMatrix& g1,
                                  const std::vector<ComplexMatrix>& V,
                                  const std::vector<cplx>& x, double sigma2,
                                  Rng& rng) {
  if (g1.rows() != 1) throw DimensionError("synth_fda_rx: g1 must be 1 x N");
  const std::size_t N = g1.cols();
  const std::size_t T = V.size();
  if (x.size() != T) throw DimensionError("synth_fda_rx: pilot count mismatch");
  ComplexMatrix y = sample_cn(T, 1, sigma2, rng);
  for (std::size_t t = 0; t < T; ++t) {
    if (V[t].rows() != N || V[t].cols() != 1) {
      throw DimensionError("synth_fda_rx: pattern shape mismatch");
    }
    cplx s = 0.0;
    for (std::size_t n = 0; n < N; ++n) s += g1(0, n) * g1(0, n) * V[t](n, 0);
    y(t, 0) += s * x[t];
  }
  return y;
}

/// Stage 1: LS on the squared entries, then the principal square root per
/// element. Returns (g1_hat, g1sq_hat), both 1 x N.
inline std::pair<ComplexMatrix, ComplexMatrix> estimate_g1(
    const ComplexMatrix& y, const std::vector<ComplexMatrix>& V,
    const std::vector<cplx>& x) {
  const std::size_t T = V.size();
  if (T == 0) throw InvalidInputError("estimate_g1: no observations");
  const std::size_t N = V[0].rows();
  if (y.rows() != T || y.cols() != 1) {
    throw DimensionError("estimate_g1: observation shape mismatch");
  }
  ComplexMatrix A(T, N);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t n = 0; n < N; ++n) A(t, n) = V[t](n, 0) * x[t];
  const ComplexMatrix sol = ls_solve(A, y);  // N x 1
  ComplexMatrix g1sq(1, N), g1(1, N);
  for (std::size_t n = 0; n < N; ++n) {
    g1sq(0, n) = sol(n, 0);
    g1(0, n) = principal_sqrt(sol(n, 0));
  }
  return {g1, g1sq};
}

/// Decorrelate user k from a pilot block: Y x_k^H / (K P) = H_k v.
inline ComplexMatrix decorrelate_user(const ComplexMatrix& Y, const ComplexMatrix& X,
                                      std::size_t k, double pilot_power) {
  const std::size_t M = Y.rows();
  const std::size_t T = Y.cols();
  const double scale = static_cast<double>(X.rows()) * pilot_power;
  ComplexMatrix z(M, 1);
  for (std::size_t m = 0; m < M; ++m) {
    cplx s = 0.0;
    for (std::size_t t = 0; t < T; ++t) s += Y(m, t) * std::conj(X(k, t));
    z(m, 0) = s / scale;
  }
  return z;
}

/// Stage 2 reference: one full LS per user from N pattern blocks.
/// Y_blocks[j] is the received block under pattern j.
inline std::vector<ComplexMatrix> estimate_cascaded_reference(
    const std::vector<ComplexMatrix>& Y_blocks, const PilotPlan& plan) {
  const std::size_t N = plan.patterns[0].rows();
  if (Y_blocks.size() < N) {
    throw RankDeficiencyError("estimate_cascaded_reference: fewer blocks than N",
                              Y_blocks.size());
  }
  const std::size_t K = plan.X.rows();
  const std::size_t M = Y_blocks[0].rows();
  // V^T H_k^T = Z_k^T where Z_k = [H_k v_1 ... H_k v_N]
  ComplexMatrix Vt(N, N);
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t n = 0; n < N; ++n) Vt(j, n) = plan.patterns[j](n, 0);
  std::vector<ComplexMatrix> out;
  for (std::size_t k = 0; k < K; ++k) {
    ComplexMatrix Zt(N, M);
    for (std::size_t j = 0; j < N; ++j) {
      const ComplexMatrix z = decorrelate_user(Y_blocks[j], plan.X, k, plan.pilot_power);
      for (std::size_t m = 0; m < M; ++m) Zt(j, m) = z(m, 0);
    }
    out.push_back(ls_solve(Vt, Zt).transpose());
  }
  return out;
}

/// Peel G off the reference estimate of user 1 using the stage-1 anchor:
/// G_hat[:,n] = H1[:,n] * g1[n] / H1[0,n].
inline ComplexMatrix decompose_reference(const ComplexMatrix& H1_ref,
                                         const ComplexMatrix& g1_hat) {
  const std::size_t M = H1_ref.rows();
  const std::size_t N = H1_ref.cols();
  if (g1_hat.rows() != 1 || g1_hat.cols() != N) {
    throw DimensionError("decompose_reference: g1 shape mismatch");
  }
  double row_max = 0.0;
  for (std::size_t n = 0; n < N; ++n) row_max = std::max(row_max, std::abs(H1_ref(0, n)));
  ComplexMatrix G(M, N);
  for (std::size_t n = 0; n < N; ++n) {
    if (std::abs(H1_ref(0, n)) <= 1e-12 * row_max) {
      throw IllConditionedCorrectionError(
          "decompose_reference: near-zero anchor entry", n);
    }
    const cplx scale = g1_hat(0, n) / H1_ref(0, n);
    for (std::size_t m = 0; m < M; ++m) G(m, n) = H1_ref(m, n) * scale;
  }
  return G;
}

/// Stage 2 per-step reduced estimator: ceil(N/M) pattern blocks per step,
/// stacked into a linear system in h_k(s). The stacked M*ceil(N/M)-row system
/// is truncated to its first N rows when M does not divide N.
inline std::pair<ComplexMatrix, ComplexMatrix> estimate_cascaded_reduced(
    const std::vector<ComplexMatrix>& Y_step_blocks, const ComplexMatrix& G_hat,
    const PilotPlan& plan, std::size_t k) {
  const std::size_t M = G_hat.rows();
  const std::size_t N = G_hat.cols();
  const std::size_t J = patterns_per_step(N, M);
  if (Y_step_blocks.size() < J) {
    throw RankDeficiencyError("estimate_cascaded_reduced: too few blocks",
                              Y_step_blocks.size());
  }
  ComplexMatrix A(J * M, N);
  ComplexMatrix b(J * M, 1);
  for (std::size_t j = 0; j < J; ++j) {
    const ComplexMatrix z =
        decorrelate_user(Y_step_blocks[j], plan.X, k, plan.pilot_power);
    for (std::size_t m = 0; m < M; ++m) {
      b(j * M + m, 0) = z(m, 0);
      for (std::size_t n = 0; n < N; ++n) {
        A(j * M + m, n) = G_hat(m, n) * reduced_pattern(plan, j, M)(n, 0);
      }
    }
  }
  ComplexMatrix As = A, bs = b;
  if (J * M > N) {
    ComplexMatrix At(N, N), bt(N, 1);
    for (std::size_t r = 0; r < N; ++r) {
      bt(r, 0) = b(r, 0);
      for (std::size_t n = 0; n < N; ++n) At(r, n) = A(r, n);
    }
    As = At;
    bs = bt;
  }
  ComplexMatrix h = ls_solve(As, bs);
  return {h, cascade(G_hat, h)};
}

/// Per-step full LS baseline: N patterns per step, cost N*K slots per step.
inline std::vector<ComplexMatrix> estimate_cascaded_direct(
    const std::vector<ComplexMatrix>& Y_blocks, const PilotPlan& plan) {
  return estimate_cascaded_reference(Y_blocks, plan);
}

/// NMSE = sum_k ||est_k - true_k||^2 / sum_k ||true_k||^2 (linear scale).
inline double nmse(const std::vector<ComplexMatrix>& est,
                   const std::vector<ComplexMatrix>& truth) {
  if (est.size() != truth.size()) throw DimensionError("nmse: list size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    num += (est[k] - truth[k]).frobenius_norm_sq();
    den += truth[k].frobenius_norm_sq();
  }
  if (den == 0.0) throw UndefinedMetricError("nmse: all-zero reference");
  return num / den;
}

inline double nmse(const ComplexMatrix& est, const ComplexMatrix& truth) {
  return nmse(std::vector<ComplexMatrix>{est}, std::vector<ComplexMatrix>{truth});
}

inline double to_db(double x) { return 10.0 * std::log10(x); }

/// Stage 1 + stage 2 over one window: estimates g1, the reference channels at
/// step `ref_step`, G_hat, and the per-step cascaded channels for the window
/// steps [first_step, first_step + S).
struct WindowEstimate {
  ComplexMatrix g1_hat;     // 1 x N
  ComplexMatrix g1sq_hat;   // 1 x N
  ComplexMatrix G_hat;      // M x N
  std::vector<std::vector<ComplexMatrix>> H_hat;  // [K][S], M x N
  std::vector<std::vector<ComplexMatrix>> h_hat;  // [K][S], N x 1
  std::size_t pilot_slots = 0;
};

inline WindowEstimate estimate_window(const Episode& ep, std::size_t ref_step,
                                      std::size_t first_step, std::size_t S,
                                      double sigma2, Rng& rng) {
  const SystemConfig& cfg = ep.cfg;
  const std::size_t N = cfg.N();
  const std::size_t K = cfg.K;
  const PilotPlan plan = make_pilot_plan(K, N);
  WindowEstimate w;

  // stage 1: FDA sounding of g1 = first row of G
  const ComplexMatrix g1_true = ep.G.row(0);
  std::vector<cplx> x_fda(N, cplx(1.0, 0.0));
  const ComplexMatrix y_fda = synth_fda_rx(g1_true, plan.patterns, x_fda, sigma2, rng);
  auto [g1_hat, g1sq_hat] = estimate_g1(y_fda, plan.patterns, x_fda);
  w.g1_hat = g1_hat;
  w.g1sq_hat = g1sq_hat;

  // stage 2 reference at ref_step: full LS, then peel off G
  std::vector<ComplexMatrix> ref_blocks;
  std::vector<ComplexMatrix> H_ref(K, ComplexMatrix(cfg.M, N));
  for (std::size_t k = 0; k < K; ++k) H_ref[k] = ep.H[k][ref_step];
  for (std::size_t j = 0; j < N; ++j) {
    ref_blocks.push_back(synth_uplink_rx(H_ref, plan.patterns[j], plan.X, sigma2, rng));
  }
  const std::vector<ComplexMatrix> H_ref_hat =
      estimate_cascaded_reference(ref_blocks, plan);
  w.G_hat = decompose_reference(H_ref_hat[0], w.g1_hat);

  // stage 2 reduced: per-step h_k for the window
  const std::size_t J = patterns_per_step(N, cfg.M);
  w.H_hat.assign(K, {});
  w.h_hat.assign(K, {});
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<ComplexMatrix> H_step(K, ComplexMatrix(cfg.M, N));
    for (std::size_t k = 0; k < K; ++k) H_step[k] = ep.H[k][first_step + s];
    std::vector<ComplexMatrix> blocks;
    for (std::size_t j = 0; j < J; ++j) {
      blocks.push_back(
          synth_uplink_rx(H_step, reduced_pattern(plan, j, cfg.M), plan.X, sigma2, rng));
    }
    for (std::size_t k = 0; k < K; ++k) {
      auto [hk, Hk] = estimate_cascaded_reduced(blocks, w.G_hat, plan, k);
      w.h_hat[k].push_back(hk);
      w.H_hat[k].push_back(Hk);
    }
  }
  w.pilot_slots = stage1_slots(N) + stage2_reference_slots(N) +
                  S * stage2_step_slots(N, cfg.M, K);
  return w;
}

}  // namespace risp
