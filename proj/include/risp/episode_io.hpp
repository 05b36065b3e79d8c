#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "risp/channel.hpp"
#include "risp/checkpoint.hpp"
#include "risp/errors.hpp"

namespace risp {

/// Flat little-endian episode container: magic "RISPEPI1", config block,
/// step count, then G, the per-user path sets, and the per-user h(s)
/// trajectories as interleaved re/im doubles. H is rebuilt on load.
inline void save_episode(const std::string& path, const Episode& ep) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("save_episode: cannot open " + path);
  using namespace detail;
  os.write("RISPEPI1", 8);
  const SystemConfig& c = ep.cfg;
  put_u64(os, c.M);
  put_u64(os, c.Mx);
  put_u64(os, c.My);
  put_u64(os, c.K);
  put_u64(os, c.Nx);
  put_u64(os, c.Ny);
  put_u64(os, c.L_G);
  put_u64(os, c.L_k);
  put_f64(os, c.f_c);
  put_f64(os, c.v_max);
  put_u64(os, c.T_S);
  put_u64(os, c.tau);
  put_u64(os, c.S);
  put_f64(os, c.snr_db);
  put_f64(os, c.slot_duration_s);
  put_u64(os, c.seed);
  put_u64(os, ep.steps());
  auto put_cm = [&](const ComplexMatrix& m) {
    for (const cplx& z : m.data()) {
      put_f64(os, z.real());
      put_f64(os, z.imag());
    }
  };
  put_cm(ep.G);
  for (std::size_t k = 0; k < c.K; ++k) {
    const PathSet& ps = ep.ue_paths[k];
    for (std::size_t g = 0; g < c.L_k; ++g) {
      put_f64(os, ps.beta[g].real());
      put_f64(os, ps.beta[g].imag());
      put_f64(os, ps.psi[g]);
      put_f64(os, ps.phi[g]);
      put_f64(os, ps.doppler[g]);
    }
  }
  for (std::size_t k = 0; k < c.K; ++k)
    for (std::size_t s = 0; s < ep.steps(); ++s) put_cm(ep.h[k][s]);
  if (!os) throw CheckpointError("save_episode: write failed for " + path);
}

inline Episode load_episode(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("load_episode: cannot open " + path);
  using namespace detail;
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, "RISPEPI1", 8) != 0) {
    throw CheckpointError("load_episode: bad magic");
  }
  Episode ep;
  SystemConfig& c = ep.cfg;
  c.M = get_u64(is);
  c.Mx = get_u64(is);
  c.My = get_u64(is);
  c.K = get_u64(is);
  c.Nx = get_u64(is);
  c.Ny = get_u64(is);
  c.L_G = get_u64(is);
  c.L_k = get_u64(is);
  c.f_c = get_f64(is);
  c.v_max = get_f64(is);
  c.T_S = get_u64(is);
  c.tau = get_u64(is);
  c.S = get_u64(is);
  c.snr_db = get_f64(is);
  c.slot_duration_s = get_f64(is);
  c.seed = get_u64(is);
  const std::size_t steps = get_u64(is);
  c.validate();
  auto get_cm = [&](std::size_t r, std::size_t cc) {
    ComplexMatrix m(r, cc);
    for (cplx& z : m.data()) {
      const double re = get_f64(is);
      const double im = get_f64(is);
      z = cplx(re, im);
    }
    return m;
  };
  ep.G = get_cm(c.M, c.N());
  for (std::size_t k = 0; k < c.K; ++k) {
    PathSet ps;
    for (std::size_t g = 0; g < c.L_k; ++g) {
      const double re = get_f64(is);
      const double im = get_f64(is);
      ps.beta.emplace_back(re, im);
      ps.psi.push_back(get_f64(is));
      ps.phi.push_back(get_f64(is));
      ps.doppler.push_back(get_f64(is));
    }
    ep.ue_paths.push_back(ps);
  }
  ep.h.assign(c.K, {});
  ep.H.assign(c.K, {});
  for (std::size_t k = 0; k < c.K; ++k)
    for (std::size_t s = 0; s < steps; ++s) {
      ep.h[k].push_back(get_cm(c.N(), 1));
      ep.H[k].push_back(cascade(ep.G, ep.h[k][s]));
    }
  if (!is) throw CheckpointError("load_episode: truncated file");
  return ep;
}

/// Lossless text dump for small episodes (hex-encoded doubles).
inline void dump_episode_text(std::ostream& os, const Episode& ep) {
  os << "episode steps=" << ep.steps() << " M=" << ep.cfg.M
     << " N=" << ep.cfg.N() << " K=" << ep.cfg.K << "\n";
  char buf[64];
  auto put = [&](const char* tag, const ComplexMatrix& m) {
    os << tag << " " << m.rows() << "x" << m.cols() << "\n";
    for (const cplx& z : m.data()) {
      std::snprintf(buf, sizeof buf, "%a %a\n", z.real(), z.imag());
      os << buf;
    }
  };
  put("G", ep.G);
  for (std::size_t k = 0; k < ep.cfg.K; ++k)
    for (std::size_t s = 0; s < ep.steps(); ++s) {
      os << "user " << k << " step " << s << "\n";
      put("h", ep.h[k][s]);
    }
}

}  // namespace risp
