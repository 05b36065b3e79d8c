#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "risp/complex_matrix.hpp"
#include "risp/config.hpp"
#include "risp/errors.hpp"
#include "risp/linalg.hpp"
#include "risp/pilot.hpp"

namespace risp {

/// Pilot-overhead bookkeeping for the proposed scheme and the baselines.
struct OverheadReport {
  std::size_t P_L = 0;    // pilot slots per large block T_L
  double P_a = 0.0;       // P_L / tau, average slots per T_S
  double lambda_d = 0.0;  // (T_S - P_a)/T_S with T_S = T_L / tau slots
  double P_a_mvu = 0.0;
  double P_a_parafac = 0.0;
  double P_a_twotimescale = 0.0;
  std::size_t parafac_P = 0;
};

inline std::size_t pilot_overhead_P_L(std::size_t N, std::size_t K, std::size_t S,
                                      std::size_t M) {
  return 3 * N + 2 + K * S * patterns_per_step(N, M);
}

/// All Table-style cost formulas. `T_L` is the large block length in slots;
/// P is the PARAFAC pilot parameter (0 = smallest feasible ceil(N/M)).
inline OverheadReport pilot_overhead(const SystemConfig& cfg, std::size_t T_L,
                                     std::size_t P = 0) {
  cfg.validate();
  const std::size_t N = cfg.N();
  OverheadReport r;
  r.P_L = pilot_overhead_P_L(N, cfg.K, cfg.S, cfg.M);
  r.P_a = static_cast<double>(r.P_L) / static_cast<double>(cfg.tau);
  const double T_S_slots = static_cast<double>(T_L) / static_cast<double>(cfg.tau);
  r.lambda_d = (T_S_slots - r.P_a) / T_S_slots;
  r.P_a_mvu = static_cast<double>(N * cfg.K);
  r.parafac_P = P ? P : patterns_per_step(N, cfg.M);
  if (cfg.M * r.parafac_P < N) {
    throw InfeasibleError("pilot_overhead: PARAFAC needs M*P >= N");
  }
  r.P_a_parafac = static_cast<double>(cfg.K * cfg.M * r.parafac_P);
  r.P_a_twotimescale =
      2.0 * static_cast<double>(N + 1) / static_cast<double>(cfg.tau) +
      static_cast<double>(cfg.K * patterns_per_step(N, cfg.M));
  return r;
}

struct TauBounds {
  double prop1_loose;  // 3/K + S/M + S/N + 2/(NK)
  double prop1_exact;  // P_L / (N K)
  double prop2;        // M/K + S
};

inline TauBounds feasibility_tau_bounds(const SystemConfig& cfg) {
  cfg.validate();
  const double N = static_cast<double>(cfg.N());
  const double M = static_cast<double>(cfg.M);
  const double K = static_cast<double>(cfg.K);
  const double S = static_cast<double>(cfg.S);
  TauBounds b;
  b.prop1_loose = 3.0 / K + S / M + S / N + 2.0 / (N * K);
  b.prop1_exact =
      static_cast<double>(pilot_overhead_P_L(cfg.N(), cfg.K, cfg.S, cfg.M)) / (N * K);
  b.prop2 = M / K + S;
  return b;
}

/// Parameter count of a stacked-LSTM head: per layer 4(n_in n + n^2 + n),
/// plus the dense output n_last * n_out + n_out.
inline std::size_t lstm_param_count(std::size_t n_in,
                                    const std::vector<std::size_t>& cells,
                                    std::size_t n_out) {
  if (cells.empty()) throw InvalidInputError("lstm_param_count: empty cell list");
  if (n_in < 1 || n_out < 1) throw InvalidInputError("lstm_param_count: sizes >= 1");
  std::size_t total = 0;
  std::size_t prev = n_in;
  for (std::size_t n : cells) {
    if (n < 1) throw InvalidInputError("lstm_param_count: sizes >= 1");
    total += 4 * (prev * n + n * n + n);
    prev = n;
  }
  total += prev * n_out + n_out;
  return total;
}

inline std::size_t sclstm_complexity(std::size_t M, std::size_t N, std::size_t K) {
  if (M < 1 || N < 1 || K < 1) throw InvalidInputError("sclstm_complexity: args >= 1");
  return 360 * K * N * N + (4 * K * M + 4 * M + 42 * K) * N;
}

/// Zero-forcing precoder over K effective channels of length M (rows of
/// H_eff). W = H_eff^H (H_eff H_eff^H)^-1, normalized to unit total power.
inline ComplexMatrix zf_precoder(const ComplexMatrix& H_eff) {
  const std::size_t K = H_eff.rows();
  const std::size_t M = H_eff.cols();
  if (K > M) throw DimensionError("zf_precoder: K must be <= M");
  // solve H_eff W = I for W (M x K) in least squares via the adjoint system
  const ComplexMatrix A = H_eff.adjoint();          // M x K
  const ComplexMatrix gram = H_eff * A;             // K x K
  const ComplexMatrix inv = ls_solve(gram, ComplexMatrix::identity(K));
  ComplexMatrix W = A * inv;                        // M x K
  const double p = W.frobenius_norm();
  if (p == 0.0) throw RankDeficiencyError("zf_precoder: zero precoder", 0);
  return cplx(1.0 / p, 0.0) * W;
}

/// Greedy RIS phase configuration: align every element to the strongest
/// user's cascaded path seen from the first BS antenna.
inline std::vector<double> greedy_ris_phases(const ComplexMatrix& G,
                                             const std::vector<ComplexMatrix>& h) {
  const std::size_t N = G.cols();
  std::size_t best_k = 0;
  double best = -1.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double e = h[k].frobenius_norm_sq();
    if (e > best) {
      best = e;
      best_k = k;
    }
  }
  std::vector<double> theta(N, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    const cplx prod = h[best_k](n, 0) * G(0, n);
    theta[n] = -std::arg(prod);
  }
  return theta;
}

/// Downlink sum rate R = lambda_d * sum_k log2(1 + SINR_k) for given channels,
/// precoder columns w_k, and RIS phases.
inline double sum_rate(const ComplexMatrix& G, const std::vector<ComplexMatrix>& h,
                       const ComplexMatrix& W, const std::vector<double>& theta,
                       double sigma2, double lambda_d) {
  const std::size_t K = h.size();
  const std::size_t N = G.cols();
  if (theta.size() != N) throw DimensionError("sum_rate: theta length != N");
  if (W.cols() != K) throw DimensionError("sum_rate: precoder column count != K");
  // effective downlink channel row for user k: e_k = h_k^H Theta G^H (1 x M)
  std::vector<ComplexMatrix> eff;
  for (std::size_t k = 0; k < K; ++k) {
    ComplexMatrix e(1, G.rows());
    for (std::size_t m = 0; m < G.rows(); ++m) {
      cplx s = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const cplx ph(std::cos(theta[n]), std::sin(theta[n]));
        s += std::conj(h[k](n, 0)) * ph * std::conj(G(m, n));
      }
      e(0, m) = s;
    }
    eff.push_back(e);
  }
  double rate = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    double sig = 0.0, interf = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      const ComplexMatrix x = eff[k] * W.col(j);
      const double pwr = std::norm(x(0, 0));
      if (j == k)
        sig = pwr;
      else
        interf += pwr;
    }
    if (sigma2 <= 0.0 && interf <= 1e-12 * sig && sig > 0.0) {
      throw DomainError("sum_rate: infinite SINR (sigma2 <= 0, no interference)");
    }
    rate += std::log2(1.0 + sig / (interf + sigma2));
  }
  return lambda_d * rate;
}

}  // namespace risp
