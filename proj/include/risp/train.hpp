#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "risp/adam.hpp"
#include "risp/channel.hpp"
#include "risp/config.hpp"
#include "risp/errors.hpp"
#include "risp/parallel.hpp"
#include "risp/pilot.hpp"
#include "risp/sclstm.hpp"

namespace risp {

/// One training sample: the Eq.-17 style input stack (K users x S steps x
/// 2MN reals, user-major) and the true cascaded channels at step S+1.
struct Sample {
  std::vector<double> input;
  std::vector<ComplexMatrix> target;  // [K], M x N
};

using Dataset = std::vector<Sample>;

/// Build a dataset of independent episodes. Each sample's input is the
/// stage-1/2 estimated window at the configured noise level (or the true
/// channels when `genie` is set); the target is the next-step truth.
inline Dataset build_dataset(const SystemConfig& cfg, std::size_t n_samples,
                             double sigma2, Rng& rng, bool genie = false) {
  cfg.validate();
  const std::size_t slice = 2 * cfg.M * cfg.N();
  Dataset ds;
  ds.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    Rng ep_rng = rng.split(i);
    Rng noise_rng = ep_rng.split(1u << 20);
    const Episode ep = gen_episode(cfg, cfg.S + 1, ep_rng);
    Sample smp;
    smp.input.resize(cfg.K * cfg.S * slice);
    if (genie) {
      for (std::size_t k = 0; k < cfg.K; ++k)
        for (std::size_t s = 0; s < cfg.S; ++s) {
          const std::vector<double> v = stack_complex(ep.H[k][s]);
          std::copy(v.begin(), v.end(), smp.input.begin() + (k * cfg.S + s) * slice);
        }
    } else {
      const WindowEstimate w = estimate_window(ep, 0, 0, cfg.S, sigma2, noise_rng);
      for (std::size_t k = 0; k < cfg.K; ++k)
        for (std::size_t s = 0; s < cfg.S; ++s) {
          const std::vector<double> v = stack_complex(w.H_hat[k][s]);
          std::copy(v.begin(), v.end(), smp.input.begin() + (k * cfg.S + s) * slice);
        }
    }
    for (std::size_t k = 0; k < cfg.K; ++k) smp.target.push_back(ep.H[k][cfg.S]);
    ds.push_back(std::move(smp));
  }
  return ds;
}

/// Per-dataset normalization constant c = 1 / rms(target entries).
inline double norm_constant(const Dataset& ds) {
  double s = 0.0;
  std::size_t count = 0;
  for (const Sample& smp : ds)
    for (const ComplexMatrix& t : smp.target) {
      s += t.frobenius_norm_sq();
      count += t.size();
    }
  if (count == 0 || s == 0.0) throw InvalidInputError("norm_constant: empty targets");
  return 1.0 / std::sqrt(s / static_cast<double>(count));
}

struct TrainHyper {
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  AdamHyper adam;
};

struct EpochStats {
  std::size_t epoch;
  double train_loss;
  double val_loss;
  double lr;
};

struct TrainedModel {
  SclstmParams params;
  double norm_c = 1.0;
  std::vector<EpochStats> history;
  double best_val = 0.0;
  std::size_t best_epoch = 0;
};

namespace detail {

inline double batch_pass(const SclstmParams& p, const Dataset& ds,
                         const std::vector<std::size_t>& idx, std::size_t begin,
                         std::size_t end, double norm_c, SclstmParams* grads) {
  const std::size_t B = end - begin;
  const double inv_b = 1.0 / static_cast<double>(B);
  const std::size_t workers = thread_count();
  std::vector<SclstmParams> wg;
  std::vector<double> wloss(workers, 0.0);
  if (grads)
    for (std::size_t w = 0; w < workers; ++w) wg.push_back(make_zero_like(p));
  parallel_chunks(B, workers, [&](std::size_t w, std::size_t b, std::size_t e) {
    std::vector<double> scaled;
    for (std::size_t i = b; i < e; ++i) {
      const Sample& smp = ds[idx[begin + i]];
      scaled.assign(smp.input.begin(), smp.input.end());
      for (double& x : scaled) x *= norm_c;
      std::vector<ComplexMatrix> tgt;
      for (const ComplexMatrix& t : smp.target) tgt.push_back(cplx(norm_c, 0.0) * t);
      ForwardCache fc;
      const SclstmOutput out = sclstm_forward(p, scaled.data(), &fc);
      double l = 0.0;
      for (std::size_t k = 0; k < tgt.size(); ++k)
        l += (out.H[k] - tgt[k]).frobenius_norm_sq();
      wloss[w] += l;
      if (grads) sclstm_backward(p, scaled.data(), fc, out, tgt, inv_b, wg[w]);
    }
  });
  if (grads) {
    // fixed worker-order reduction keeps gradients deterministic
    std::vector<std::vector<double>*> acc;
    visit_params(*grads,
                 [&](const std::string&, std::vector<double>& v) { acc.push_back(&v); });
    for (std::size_t w = 0; w < wg.size(); ++w) {
      std::vector<std::vector<double>*> part;
      visit_params(wg[w],
                   [&](const std::string&, std::vector<double>& v) { part.push_back(&v); });
      for (std::size_t t = 0; t < acc.size(); ++t)
        for (std::size_t j = 0; j < acc[t]->size(); ++j)
          (*acc[t])[j] += (*part[t])[j];
    }
  }
  double loss = 0.0;
  for (double l : wloss) loss += l;
  return loss * inv_b;
}

}  // namespace detail

/// Loss of `p` on a whole dataset (normalized domain).
inline double dataset_loss(const SclstmParams& p, const Dataset& ds, double norm_c) {
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return detail::batch_pass(p, ds, idx, 0, ds.size(), norm_c, nullptr);
}

/// Minibatch Adam training; keeps the parameters with the best validation
/// loss (epoch 0 = the untouched initialization counts as a candidate).
inline TrainedModel train(const Dataset& train_set, const Dataset& val_set,
                          std::size_t M, std::size_t N, std::size_t K,
                          std::size_t S, const TrainHyper& hp, Rng& rng) {
  if (train_set.empty() || val_set.empty()) {
    throw InvalidInputError("train: empty dataset");
  }
  TrainedModel tm;
  tm.norm_c = norm_constant(train_set);
  SclstmParams p = init_sclstm(M, N, K, S, rng);
  AdamState st(p);

  tm.best_val = dataset_loss(p, val_set, tm.norm_c);
  tm.best_epoch = 0;
  tm.params = p;
  tm.history.push_back(
      {0, dataset_loss(p, train_set, tm.norm_c), tm.best_val, hp.adam.lr});

  std::vector<std::size_t> idx(train_set.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    for (std::size_t i = idx.size(); i > 1; --i) {
      const std::size_t j =
          static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
      std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
    }
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    double lr_now = hp.adam.lr;
    for (std::size_t b = 0; b < idx.size(); b += hp.batch_size) {
      const std::size_t e = std::min(idx.size(), b + hp.batch_size);
      SclstmParams grads = make_zero_like(p);
      epoch_loss += detail::batch_pass(p, train_set, idx, b, e, tm.norm_c, &grads);
      adam_step(p, grads, st, hp.adam);
      lr_now = hp.adam.lr / (1.0 + hp.adam.decay * static_cast<double>(st.t - 1));
      ++batches;
    }
    epoch_loss /= static_cast<double>(batches);
    if (!std::isfinite(epoch_loss)) {
      throw TrainingDivergedError("train: non-finite loss", epoch);
    }
    const double val = dataset_loss(p, val_set, tm.norm_c);
    tm.history.push_back({epoch, epoch_loss, val, lr_now});
    if (val < tm.best_val) {
      tm.best_val = val;
      tm.best_epoch = epoch;
      tm.params = p;
    }
  }
  return tm;
}

/// Inference on a raw (unnormalized) input stack; the normalization constant
/// is folded back so H~ and h~ are in physical scale (G~ keeps its own scale,
/// which the Eq.-21 correction later anchors).
inline SclstmOutput model_predict(const SclstmParams& p, double norm_c,
                                  const std::vector<double>& input_raw) {
  std::vector<double> scaled(input_raw);
  for (double& x : scaled) x *= norm_c;
  SclstmOutput out = sclstm_forward(p, scaled.data());
  const cplx inv(1.0 / norm_c, 0.0);
  for (auto& h : out.h) h = inv * h;
  for (auto& H : out.H) H = inv * H;
  return out;
}

/// Linear-scale prediction NMSE of a trained model over a dataset
/// (trial-averaged ratio of squared norms).
inline double dataset_nmse(const SclstmParams& p, double norm_c, const Dataset& ds) {
  double acc = 0.0;
  for (const Sample& smp : ds) {
    const SclstmOutput out = model_predict(p, norm_c, smp.input);
    acc += nmse(out.H, smp.target);
  }
  return acc / static_cast<double>(ds.size());
}

}  // namespace risp
