#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "risp/channel.hpp"
#include "risp/complex_matrix.hpp"
#include "risp/config.hpp"
#include "risp/errors.hpp"
#include "risp/linalg.hpp"
#include "risp/pilot.hpp"
#include "risp/train.hpp"

namespace risp {

/// Anchor the decomposition to the stage-1 row: Delta1[n] = G~[0,n]/g1[n],
/// G_hat = G~ Delta1^-1 (first row becomes g1), h_hat_k = Delta1 h~_k.
/// The cascaded product is unchanged.
inline std::pair<ComplexMatrix, std::vector<ComplexMatrix>> correct_scaling(
    const ComplexMatrix& G_tilde, const std::vector<ComplexMatrix>& h_tilde,
    const ComplexMatrix& g1_hat) {
  const std::size_t M = G_tilde.rows();
  const std::size_t N = G_tilde.cols();
  if (g1_hat.rows() != 1 || g1_hat.cols() != N) {
    throw DimensionError("correct_scaling: g1 shape mismatch");
  }
  double g1_max = 0.0, row_max = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    g1_max = std::max(g1_max, std::abs(g1_hat(0, n)));
    row_max = std::max(row_max, std::abs(G_tilde(0, n)));
  }
  ComplexMatrix G_hat(M, N);
  std::vector<ComplexMatrix> h_hat(h_tilde.size(), ComplexMatrix(N, 1));
  for (std::size_t n = 0; n < N; ++n) {
    if (std::abs(g1_hat(0, n)) <= 1e-12 * g1_max) {
      throw IllConditionedCorrectionError("correct_scaling: near-zero g1 entry", n);
    }
    if (std::abs(G_tilde(0, n)) <= 1e-12 * row_max) {
      throw IllConditionedCorrectionError(
          "correct_scaling: near-zero first-row entry", n);
    }
    const cplx delta = G_tilde(0, n) / g1_hat(0, n);
    for (std::size_t m = 0; m < M; ++m) G_hat(m, n) = G_tilde(m, n) / delta;
    for (std::size_t k = 0; k < h_tilde.size(); ++k) {
      h_hat[k](n, 0) = delta * h_tilde[k](n, 0);
    }
  }
  return {G_hat, h_hat};
}

enum class G1Source { genie, stage1, perturbed };

struct StepRecord {
  std::size_t t = 0;       // global step index
  std::size_t block = 0;   // large-timescale block index
  bool predicted = false;  // false = pilot-estimated window fill
  double nmse_H = 0.0;
  std::size_t pilots_cumulative = 0;
};

struct PredictionTrace {
  std::vector<StepRecord> steps;
  std::vector<ComplexMatrix> G_per_block;          // corrected G_hat
  std::vector<std::size_t> stage_reruns;           // block start steps where stages 1-2 ran
  std::size_t pilots_total = 0;
};

/// Algorithm-style online loop over `T_C_steps` steps with block length
/// `tau_steps`. At every block start stages 1-2 run and fill the S-step
/// window with pilot estimates; the remaining steps of the block are
/// predicted, the window sliding over the model's own outputs.
inline PredictionTrace predict_online(const TrainedModel& model, const Episode& ep,
                                      std::size_t T_C_steps, std::size_t tau_steps,
                                      double sigma2, G1Source g1_source, Rng& rng,
                                      double g1_perturb_nmse = 0.0) {
  const SystemConfig& cfg = ep.cfg;
  const std::size_t M = cfg.M, N = cfg.N(), K = cfg.K, S = cfg.S;
  if (model.params.M != M || model.params.N != N || model.params.K != K ||
      model.params.S != S) {
    throw CheckpointError("predict_online: model/config mismatch");
  }
  if (tau_steps < S + 1) throw InvalidInputError("predict_online: tau_steps < S+1");
  if (ep.steps() < T_C_steps) throw InvalidInputError("predict_online: episode too short");

  PredictionTrace tr;
  const std::size_t slice = 2 * M * N;
  std::vector<std::vector<ComplexMatrix>> window(K);  // [K][S]

  const std::size_t block_pilots =
      stage1_slots(N) + stage2_reference_slots(N) + S * stage2_step_slots(N, M, K);

  for (std::size_t t = 0; t < T_C_steps; ++t) {
    const std::size_t block = t / tau_steps;
    const std::size_t in_block = t % tau_steps;
    if (in_block == 0) {
      // stages 1-2: fill the window with pilot-based estimates of steps t..t+S-1
      Rng est_rng = rng.split(0xE57 + t);
      WindowEstimate w = estimate_window(ep, t, t, S, sigma2, est_rng);
      ComplexMatrix g1 = w.g1_hat;
      if (g1_source == G1Source::genie) {
        g1 = ep.G.row(0);
      } else if (g1_source == G1Source::perturbed) {
        // additive CN perturbation scaled to the target NMSE
        g1 = ep.G.row(0);
        Rng prng = rng.split(0xBAD + t);
        const double pvar = g1_perturb_nmse * g1.frobenius_norm_sq() /
                            static_cast<double>(N);
        const ComplexMatrix e = sample_cn(1, N, pvar, prng);
        g1 = g1 + e;
      }
      for (std::size_t k = 0; k < K; ++k) window[k] = w.H_hat[k];
      tr.stage_reruns.push_back(t);
      tr.pilots_total += block_pilots;
      tr.G_per_block.push_back(ComplexMatrix(M, N));  // filled at first prediction

      // record the S window steps as pilot-estimated
      for (std::size_t s = 0; s < S && t + s < T_C_steps; ++s) {
        std::vector<ComplexMatrix> truth;
        std::vector<ComplexMatrix> est;
        for (std::size_t k = 0; k < K; ++k) {
          truth.push_back(ep.H[k][t + s]);
          est.push_back(w.H_hat[k][s]);
        }
        tr.steps.push_back({t + s, block, false, nmse(est, truth), tr.pilots_total});
      }
      // the first S-1 steps after the boundary are consumed by the window
      t += S - 1;
      continue;
    }
    // prediction step: the model maps the window to step t
    std::vector<double> input(K * S * slice);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t s = 0; s < S; ++s) {
        const std::vector<double> v = stack_complex(window[k][s]);
        std::copy(v.begin(), v.end(), input.begin() + (k * S + s) * slice);
      }
    SclstmOutput out = model_predict(model.params, model.norm_c, input);

    // scaling correction with this block's g1
    ComplexMatrix g1 = ep.G.row(0);
    if (g1_source == G1Source::stage1) {
      // reuse the stage-1 estimate computed at the block start
      Rng est_rng = rng.split(0xE57 + block * tau_steps);
      const PilotPlan plan = make_pilot_plan(K, N);
      std::vector<cplx> x_fda(N, cplx(1.0, 0.0));
      const ComplexMatrix y_fda =
          synth_fda_rx(ep.G.row(0), plan.patterns, x_fda, sigma2, est_rng);
      g1 = estimate_g1(y_fda, plan.patterns, x_fda).first;
    } else if (g1_source == G1Source::perturbed) {
      Rng prng = rng.split(0xBAD + block * tau_steps);
      const double pvar = g1_perturb_nmse * g1.frobenius_norm_sq() /
                          static_cast<double>(N);
      g1 = g1 + sample_cn(1, N, pvar, prng);
    }
    auto [G_hat, h_hat] = correct_scaling(out.G, out.h, g1);
    tr.G_per_block[block] = G_hat;

    std::vector<ComplexMatrix> truth;
    for (std::size_t k = 0; k < K; ++k) truth.push_back(ep.H[k][t]);
    tr.steps.push_back({t, block, true, nmse(out.H, truth), tr.pilots_total});

    // slide the window with the model's own output (no pilots are sent here)
    for (std::size_t k = 0; k < K; ++k) {
      window[k].erase(window[k].begin());
      window[k].push_back(out.H[k]);
    }
  }
  return tr;
}

// ---------------------------------------------------------------------------
// decision-directed refinement (QPSK pseudo-pilots)

inline const std::vector<cplx>& qpsk_constellation() {
  static const double a = 1.0 / std::sqrt(2.0);
  static const std::vector<cplx> pts = {
      {a, a}, {-a, a}, {-a, -a}, {a, -a}};
  return pts;
}

inline std::size_t qpsk_nearest(const cplx& z) {
  const auto& pts = qpsk_constellation();
  std::size_t best = 0;
  double bd = std::norm(z - pts[0]);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = std::norm(z - pts[i]);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

/// Received data blocks: one M x T block per reflection pattern, with each
/// user sending `symbols[k][j*T + t]` in block j.
inline std::vector<ComplexMatrix> synth_data_blocks(
    const std::vector<ComplexMatrix>& H, const std::vector<ComplexMatrix>& patterns,
    const std::vector<std::vector<std::size_t>>& symbols, std::size_t T,
    double sigma2, Rng& rng) {
  const auto& pts = qpsk_constellation();
  std::vector<ComplexMatrix> blocks;
  for (std::size_t j = 0; j < patterns.size(); ++j) {
    ComplexMatrix X(H.size(), T);
    for (std::size_t k = 0; k < H.size(); ++k)
      for (std::size_t t = 0; t < T; ++t) X(k, t) = pts[symbols[k][j * T + t]];
    blocks.push_back(synth_uplink_rx(H, patterns[j], X, sigma2, rng));
  }
  return blocks;
}

struct RefineResult {
  std::vector<ComplexMatrix> H_refined;  // [K], M x N
  std::vector<std::vector<std::size_t>> decided;  // [K][J*T] QPSK indices
  std::size_t symbol_errors = 0;
  std::size_t total_symbols = 0;
  bool reliable = true;
};

/// Detect the data symbols with the predicted channels, hard-decide, then
/// LS re-estimate the full cascaded channels using them as pseudo pilots.
inline RefineResult decision_directed_refine(
    const std::vector<ComplexMatrix>& H_tilde,
    const std::vector<ComplexMatrix>& Y_blocks,
    const std::vector<ComplexMatrix>& patterns,
    const std::vector<std::vector<std::size_t>>* true_symbols = nullptr) {
  if (Y_blocks.empty()) throw InvalidInputError("decision_directed_refine: no data");
  const std::size_t K = H_tilde.size();
  const std::size_t M = H_tilde[0].rows();
  const std::size_t N = H_tilde[0].cols();
  const std::size_t J = Y_blocks.size();
  const std::size_t T = Y_blocks[0].cols();
  if (patterns.size() < J) {
    throw DimensionError("decision_directed_refine: missing patterns");
  }
  const auto& pts = qpsk_constellation();

  RefineResult res;
  res.decided.assign(K, std::vector<std::size_t>(J * T, 0));

  // detection pass: per block, LS on the predicted effective channels
  bool degenerate = false;
  for (std::size_t j = 0; j < J && !degenerate; ++j) {
    ComplexMatrix A(M, K);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t m = 0; m < M; ++m) {
        cplx s = 0.0;
        for (std::size_t n = 0; n < N; ++n) s += H_tilde[k](m, n) * patterns[j](n, 0);
        A(m, k) = s;
      }
    }
    try {
      const ComplexMatrix D = ls_solve(A, Y_blocks[j]);  // K x T soft symbols
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t t = 0; t < T; ++t)
          res.decided[k][j * T + t] = qpsk_nearest(D(k, t));
    } catch (const RankDeficiencyError&) {
      degenerate = true;
    }
  }
  if (degenerate) {
    res.reliable = false;
    res.H_refined = H_tilde;
  } else {
    // joint LS: Y = X R with X = [H_1 ... H_K] (M x KN) and per-slot
    // regressor r = [d_1 v_j ; ... ; d_K v_j]
    ComplexMatrix Rt(J * T, K * N);  // regressors transposed
    ComplexMatrix Yt(J * T, M);
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t row = j * T + t;
        for (std::size_t k = 0; k < K; ++k) {
          const cplx d = pts[res.decided[k][j * T + t]];
          for (std::size_t n = 0; n < N; ++n) {
            Rt(row, k * N + n) = d * patterns[j](n, 0);
          }
        }
        for (std::size_t m = 0; m < M; ++m) Yt(row, m) = Y_blocks[j](m, t);
      }
    }
    const ComplexMatrix Xt = ls_solve(Rt, Yt);  // KN x M
    res.H_refined.assign(K, ComplexMatrix(M, N));
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t m = 0; m < M; ++m)
          res.H_refined[k](m, n) = Xt(k * N + n, m);
  }

  if (true_symbols) {
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t i = 0; i < J * T; ++i) {
        ++res.total_symbols;
        if ((*true_symbols)[k][i] != res.decided[k][i]) ++res.symbol_errors;
      }
  } else {
    res.total_symbols = K * J * T;
  }
  return res;
}

}  // namespace risp
