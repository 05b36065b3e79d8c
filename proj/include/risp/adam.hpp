#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "risp/sclstm.hpp"

namespace risp {

struct AdamHyper {
  double lr = 0.001;
  double decay = 0.00001;  // lr_t = lr / (1 + decay * (t - 1))
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  SclstmParams m, v;
  std::size_t t = 0;

  explicit AdamState(const SclstmParams& p)
      : m(make_zero_like(p)), v(make_zero_like(p)) {}
};

/// One Adam update in place; the sparse-layer masks are preserved by
/// construction (only on-mask weights are stored).
inline void adam_step(SclstmParams& p, const SclstmParams& g, AdamState& st,
                      const AdamHyper& hp) {
  ++st.t;
  const double lr_t = hp.lr / (1.0 + hp.decay * static_cast<double>(st.t - 1));
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(st.t));

  std::vector<std::vector<double>*> pv, gv, mv, vv;
  visit_params(p, [&](const std::string&, std::vector<double>& x) { pv.push_back(&x); });
  visit_params(const_cast<SclstmParams&>(g),
               [&](const std::string&, std::vector<double>& x) { gv.push_back(&x); });
  visit_params(st.m, [&](const std::string&, std::vector<double>& x) { mv.push_back(&x); });
  visit_params(st.v, [&](const std::string&, std::vector<double>& x) { vv.push_back(&x); });

  for (std::size_t i = 0; i < pv.size(); ++i) {
    std::vector<double>& w = *pv[i];
    const std::vector<double>& gr = *gv[i];
    std::vector<double>& m = *mv[i];
    std::vector<double>& v = *vv[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = hp.beta1 * m[j] + (1.0 - hp.beta1) * gr[j];
      v[j] = hp.beta2 * v[j] + (1.0 - hp.beta2) * gr[j] * gr[j];
      const double mh = m[j] / bc1;
      const double vh = v[j] / bc2;
      w[j] -= lr_t * mh / (std::sqrt(vh) + hp.eps);
    }
  }
}

}  // namespace risp
