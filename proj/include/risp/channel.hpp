#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "risp/complex_matrix.hpp"
#include "risp/config.hpp"
#include "risp/errors.hpp"
#include "risp/random.hpp"

namespace risp {

/// Half-wavelength UPA response (unit 2-norm). Entry for grid position
/// (n_x, n_y) is exp(j pi (n_x sin(theta) sin(phi) + n_y cos(phi))) / sqrt(Nx Ny),
/// flattened with n_x varying fastest.
inline ComplexMatrix steering_vector(double theta, double phi, std::size_t Nx,
                                     std::size_t Ny) {
  if (Nx < 1 || Ny < 1) throw DimensionError("steering_vector: Nx, Ny >= 1");
  const double cx = std::sin(theta) * std::sin(phi);
  const double cy = std::cos(phi);
  const double scale = 1.0 / std::sqrt(static_cast<double>(Nx * Ny));
  ComplexMatrix a(Nx * Ny, 1);
  for (std::size_t ny = 0; ny < Ny; ++ny) {
    for (std::size_t nx = 0; nx < Nx; ++nx) {
      const double ph = std::numbers::pi *
                        (static_cast<double>(nx) * cx + static_cast<double>(ny) * cy);
      a(ny * Nx + nx, 0) = cplx(scale * std::cos(ph), scale * std::sin(ph));
    }
  }
  return a;
}

struct GPath {
  cplx alpha;
  double theta_r, phi_r;  // BS-side angles
  double theta_t, phi_t;  // RIS-side angles
};

/// One RIS-UE multipath set: gains, angles, and Doppler shifts.
struct PathSet {
  std::vector<cplx> beta;
  std::vector<double> psi;      // azimuth
  std::vector<double> phi;      // elevation
  std::vector<double> doppler;  // Hz, in [0, f_max]
};

/// Quasi-static BS-RIS channel (M x N), geometric multipath with unit-variance
/// complex gains and angles uniform on [0, 2pi).
inline ComplexMatrix gen_bs_ris_channel(const SystemConfig& cfg, Rng& rng,
                                        std::vector<GPath>* paths_out = nullptr) {
  cfg.validate();
  const std::size_t M = cfg.M;
  const std::size_t N = cfg.N();
  ComplexMatrix g(M, N);
  const double scale =
      std::sqrt(static_cast<double>(M * N) / static_cast<double>(cfg.L_G));
  if (paths_out) paths_out->clear();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t p = 0; p < cfg.L_G; ++p) {
    GPath path;
    path.alpha = rng.cn(1.0);
    path.theta_r = rng.uniform(0.0, two_pi);
    path.phi_r = rng.uniform(0.0, two_pi);
    path.theta_t = rng.uniform(0.0, two_pi);
    path.phi_t = rng.uniform(0.0, two_pi);
    const ComplexMatrix ar = steering_vector(path.theta_r, path.phi_r, cfg.Mx, cfg.My);
    const ComplexMatrix at = steering_vector(path.theta_t, path.phi_t, cfg.Nx, cfg.Ny);
    const cplx c = scale * path.alpha;
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t n = 0; n < N; ++n)
        g(m, n) += c * ar(m, 0) * std::conj(at(n, 0));
    if (paths_out) paths_out->push_back(path);
  }
  return g;
}

inline PathSet gen_ris_ue_paths(const SystemConfig& cfg, Rng& rng) {
  cfg.validate();
  PathSet p;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double f_max = cfg.f_max();
  for (std::size_t g = 0; g < cfg.L_k; ++g) {
    p.beta.push_back(rng.cn(1.0));
    p.psi.push_back(rng.uniform(0.0, two_pi));
    p.phi.push_back(rng.uniform(0.0, two_pi));
    p.doppler.push_back(rng.uniform(0.0, f_max));
  }
  return p;
}

/// Time-varying RIS-UE channel at step s:
/// h(s) = sqrt(N/L_k) sum_g beta_g exp(j 2 pi f_g dt s) a(psi_g, phi_g).
inline ComplexMatrix eval_ris_ue_channel(const PathSet& paths, std::size_t s,
                                         const SystemConfig& cfg) {
  const std::size_t N = cfg.N();
  const std::size_t L = paths.beta.size();
  if (L == 0) throw InvalidInputError("eval_ris_ue_channel: empty path set");
  ComplexMatrix h(N, 1);
  const double scale = std::sqrt(static_cast<double>(N) / static_cast<double>(L));
  const double dt = cfg.step_duration_s();
  for (std::size_t g = 0; g < L; ++g) {
    const double ph = 2.0 * std::numbers::pi * paths.doppler[g] * dt *
                      static_cast<double>(s);
    const cplx rot(std::cos(ph), std::sin(ph));
    const ComplexMatrix a = steering_vector(paths.psi[g], paths.phi[g], cfg.Nx, cfg.Ny);
    const cplx c = scale * paths.beta[g] * rot;
    for (std::size_t n = 0; n < N; ++n) h(n, 0) += c * a(n, 0);
  }
  return h;
}

/// One two-timescale realization: a fixed G and per-user, per-step h / H.
/// Step indexing is 0-based: h[k][s] is user k's channel at step s.
struct Episode {
  SystemConfig cfg;
  ComplexMatrix G;
  std::vector<GPath> g_paths;
  std::vector<PathSet> ue_paths;                // [K]
  std::vector<std::vector<ComplexMatrix>> h;    // [K][steps], N x 1
  std::vector<std::vector<ComplexMatrix>> H;    // [K][steps], M x N
  std::size_t steps() const { return h.empty() ? 0 : h[0].size(); }
};

inline Episode gen_episode(const SystemConfig& cfg, std::size_t total_steps, Rng& rng) {
  cfg.validate();
  if (total_steps < cfg.S + 1) {
    throw InvalidInputError("gen_episode: total_steps must be >= S+1");
  }
  Episode ep;
  ep.cfg = cfg;
  // independent child streams keep the draw layout stable if K changes
  Rng g_rng = rng.split(0);
  ep.G = gen_bs_ris_channel(cfg, g_rng, &ep.g_paths);
  ep.h.resize(cfg.K);
  ep.H.resize(cfg.K);
  for (std::size_t k = 0; k < cfg.K; ++k) {
    Rng k_rng = rng.split(k + 1);
    ep.ue_paths.push_back(gen_ris_ue_paths(cfg, k_rng));
    for (std::size_t s = 0; s < total_steps; ++s) {
      ep.h[k].push_back(eval_ris_ue_channel(ep.ue_paths[k], s, cfg));
      ep.H[k].push_back(cascade(ep.G, ep.h[k][s]));
    }
  }
  return ep;
}

}  // namespace risp
