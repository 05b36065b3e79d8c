#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "risp/errors.hpp"
#include "risp/sclstm.hpp"
#include "risp/train.hpp"

namespace risp {

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}
inline void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}
inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
inline double get_f64(std::istream& is) {
  const std::uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}
inline void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::string get_str(std::istream& is) {
  const std::uint32_t n = get_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

}  // namespace detail

/// Little-endian binary checkpoint: magic "RISPCKP1", version, dims, the
/// normalization constant, the two mask index maps, then every named tensor.
inline void save_checkpoint(const std::string& path, const TrainedModel& model) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("save_checkpoint: cannot open " + path);
  using namespace detail;
  os.write("RISPCKP1", 8);
  put_u32(os, 1);  // version
  const SclstmParams& p = model.params;
  put_u64(os, p.M);
  put_u64(os, p.N);
  put_u64(os, p.K);
  put_u64(os, p.S);
  put_u32(os, 0);  // dtype 0 = float64
  put_f64(os, model.norm_c);
  auto put_mask = [&](const SparseMask& m) {
    put_u64(os, m.rows);
    put_u64(os, m.cols);
    put_u64(os, m.nnz());
    for (std::size_t v : m.row_ptr) put_u64(os, v);
    for (std::size_t v : m.col_idx) put_u64(os, v);
  };
  put_mask(p.g_mask);
  put_mask(p.h_mask);
  std::uint32_t count = 0;
  visit_params(const_cast<SclstmParams&>(p),
               [&](const std::string&, std::vector<double>&) { ++count; });
  put_u32(os, count);
  visit_params(const_cast<SclstmParams&>(p),
               [&](const std::string& name, std::vector<double>& v) {
                 put_str(os, name);
                 put_u64(os, v.size());
                 for (double d : v) put_f64(os, d);
               });
  if (!os) throw CheckpointError("save_checkpoint: write failed for " + path);
}

inline TrainedModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("load_checkpoint: cannot open " + path);
  using namespace detail;
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, "RISPCKP1", 8) != 0) {
    throw CheckpointError("load_checkpoint: bad magic");
  }
  if (get_u32(is) != 1) throw CheckpointError("load_checkpoint: bad version");
  const std::uint64_t M = get_u64(is), N = get_u64(is), K = get_u64(is),
                      S = get_u64(is);
  if (get_u32(is) != 0) throw CheckpointError("load_checkpoint: bad dtype");
  TrainedModel model;
  model.norm_c = get_f64(is);
  model.params.resize(M, N, K, S);
  auto check_mask = [&](const SparseMask& m) {
    if (get_u64(is) != m.rows || get_u64(is) != m.cols || get_u64(is) != m.nnz()) {
      throw CheckpointError("load_checkpoint: mask mismatch");
    }
    for (std::size_t v : m.row_ptr)
      if (get_u64(is) != v) throw CheckpointError("load_checkpoint: mask mismatch");
    for (std::size_t v : m.col_idx)
      if (get_u64(is) != v) throw CheckpointError("load_checkpoint: mask mismatch");
  };
  check_mask(model.params.g_mask);
  check_mask(model.params.h_mask);
  std::uint32_t count = get_u32(is);
  std::uint32_t seen = 0;
  visit_params(model.params, [&](const std::string& name, std::vector<double>& v) {
    if (seen++ >= count) throw CheckpointError("load_checkpoint: missing tensor");
    if (get_str(is) != name) throw CheckpointError("load_checkpoint: tensor order");
    if (get_u64(is) != v.size()) throw CheckpointError("load_checkpoint: tensor size");
    for (double& d : v) d = get_f64(is);
  });
  if (!is) throw CheckpointError("load_checkpoint: truncated file");
  return model;
}

}  // namespace risp
