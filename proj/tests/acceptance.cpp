// Acceptance harness: one pass/fail line per criterion, nonzero exit if any
// criterion fails.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "risp/adam.hpp"
#include "risp/analytics.hpp"
#include "risp/channel.hpp"
#include "risp/checkpoint.hpp"
#include "risp/pilot.hpp"
#include "risp/pipeline.hpp"
#include "risp/sclstm.hpp"
#include "risp/train.hpp"

using namespace risp;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int idx, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s — %s\n", idx, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SystemConfig desk_cfg(std::size_t S, double snr_db) {
  SystemConfig c = preset("desk");  // M=2, K=2, N=8 (Nx=4, Ny=2)
  c.S = S;
  c.snr_db = snr_db;
  return c;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  SystemConfig cfg = preset("table3");
  const TauBounds tb = feasibility_tau_bounds(cfg);
  const double lam = 1.0 - static_cast<double>(pilot_overhead_P_L(40, 4, 4, 4)) / 5000.0;
  const bool ok = std::abs(lam - 0.9436) <= 1e-4 && tb.prop2 == 5.0 &&
                  std::abs(tb.prop1_exact - 1.7625) <= 1e-4 &&
                  seconds_since(t0) < 1.0;
  report(1, ok,
         "lambda_d=" + fmt(lam) + ", tau thresholds " + fmt(tb.prop2) + " and " +
             fmt(tb.prop1_exact) + " (" + fmt(seconds_since(t0)) + " s)");
}

void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = pilot_overhead_P_L(40, 4, 4, 4) == 282;
  for (std::size_t N : {1, 2, 8, 40}) {
    ok = ok && lstm_param_count(2 * N, {6 * N, 4 * N}, 2 * N) == 360 * N * N + 42 * N;
    Rng rng(1);
    SclstmParams p = init_sclstm(2, N, 2, 2, rng);
    const std::size_t sparse = p.g_w.size() + p.g_b.size() + p.h_w.size() + p.h_b.size();
    ok = ok && count_trainable_params(p) - sparse == 360 * N * N + 42 * N;
    ok = ok && p.g_mask.nnz() == 4 * 2 * N && p.h_mask.nnz() == 4 * 2 * N;
  }
  Rng rng(17);
  for (int t = 0; t < 100; ++t) {
    const std::size_t M = 1 + static_cast<std::size_t>(rng.uniform() * 8);
    const std::size_t N = 1 + static_cast<std::size_t>(rng.uniform() * 64);
    const std::size_t K = 1 + static_cast<std::size_t>(rng.uniform() * 8);
    ok = ok && sclstm_complexity(M, N, K) ==
                   K * (360 * N * N + 42 * N) + 4 * M * N + 4 * K * M * N;
    auto [gm, hm] = build_masks(M, N);
    ok = ok && gm.nnz() == 4 * M * N && hm.nnz() == 4 * M * N;
  }
  ok = ok && seconds_since(t0) < 5.0;
  report(2, ok, "formula suite, exact integer equality (" +
                    fmt(seconds_since(t0)) + " s)");
}

void criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t M = 2, N = 4, K = 2, S = 3;
  Rng rng(7);
  SclstmParams p = init_sclstm(M, N, K, S, rng);
  std::vector<double> input(K * S * 2 * M * N);
  for (double& x : input) x = rng.uniform(-1.0, 1.0);

  ForwardCache fc;
  const SclstmOutput out = sclstm_forward(p, input.data(), &fc);
  // target near the forward output: keeps the loss small so the central
  // difference is not dominated by roundoff while the full backward path runs
  std::vector<ComplexMatrix> target;
  for (std::size_t k = 0; k < K; ++k)
    target.push_back(out.H[k] + sample_cn(M, N, 1e-4, rng));
  SclstmParams g = make_zero_like(p);
  sclstm_backward(p, input.data(), fc, out, target, 1.0, g);

  auto loss = [&]() {
    const SclstmOutput o = sclstm_forward(p, input.data());
    double l = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      l += (o.H[k] - target[k]).frobenius_norm_sq();
    return l;
  };
  std::vector<std::vector<double>*> pv, gv;
  visit_params(p, [&](const std::string&, std::vector<double>& v) { pv.push_back(&v); });
  visit_params(g, [&](const std::string&, std::vector<double>& v) { gv.push_back(&v); });
  double worst = 0.0;
  const double eps = 1e-6;
  for (std::size_t t = 0; t < pv.size(); ++t) {
    for (std::size_t j = 0; j < pv[t]->size(); ++j) {
      double& w = (*pv[t])[j];
      const double w0 = w;
      w = w0 + eps;
      const double lp = loss();
      w = w0 - eps;
      const double lm = loss();
      w = w0;
      const double fd = (lp - lm) / (2.0 * eps);
      const double an = (*gv[t])[j];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
      worst = std::max(worst, std::abs(fd - an) / denom);
    }
  }
  const bool ok = worst <= 1e-5 && seconds_since(t0) < 60.0;
  report(3, ok, "max relative gradient error " + fmt(worst) + " (" +
                    fmt(seconds_since(t0)) + " s)");
}

void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  SystemConfig cfg = desk_cfg(4, 30.0);
  const PilotPlan plan = make_pilot_plan(cfg.K, cfg.N());
  double worst = 0.0;
  Rng root(404);
  for (int trial = 0; trial < 50; ++trial) {
    Rng er = root.split(trial);
    const Episode ep = gen_episode(cfg, cfg.S + 1, er);
    Rng nr = er.split(9);
    // stage 1, square level
    std::vector<cplx> x(cfg.N(), cplx(1.0, 0.0));
    const ComplexMatrix g1 = ep.G.row(0);
    const ComplexMatrix y = synth_fda_rx(g1, plan.patterns, x, 0.0, nr);
    auto [g1_hat, g1sq] = estimate_g1(y, plan.patterns, x);
    ComplexMatrix g1sq_true(1, cfg.N());
    for (std::size_t n = 0; n < cfg.N(); ++n) g1sq_true(0, n) = g1(0, n) * g1(0, n);
    worst = std::max(worst, std::sqrt(nmse(g1sq, g1sq_true)));
    // full window (reference + reduced)
    const WindowEstimate w = estimate_window(ep, 0, 0, cfg.S, 0.0, nr);
    for (std::size_t k = 0; k < cfg.K; ++k)
      for (std::size_t s = 0; s < cfg.S; ++s)
        worst = std::max(worst, std::sqrt(nmse(w.H_hat[k][s], ep.H[k][s])));
    // direct estimator
    std::vector<ComplexMatrix> H;
    for (std::size_t k = 0; k < cfg.K; ++k) H.push_back(ep.H[k][0]);
    std::vector<ComplexMatrix> blocks;
    for (std::size_t j = 0; j < cfg.N(); ++j)
      blocks.push_back(synth_uplink_rx(H, plan.patterns[j], plan.X, 0.0, nr));
    const std::vector<ComplexMatrix> Hd = estimate_cascaded_direct(blocks, plan);
    worst = std::max(worst, std::sqrt(nmse(Hd, H)));
  }
  const bool ok = worst <= 1e-8 && seconds_since(t0) < 60.0;
  report(4, ok, "worst noiseless relative error " + fmt(worst) + " over 50 episodes (" +
                    fmt(seconds_since(t0)) + " s)");
}

void criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  SystemConfig cfg = desk_cfg(4, 20.0);
  Rng rng(55);
  const Episode ep = gen_episode(cfg, cfg.S + 1, rng);
  bool ok = true;
  double worst_loss = 0.0, worst_rec = 0.0;
  std::vector<ComplexMatrix> h0, target;
  for (std::size_t k = 0; k < cfg.K; ++k) {
    h0.push_back(ep.h[k][0]);
    target.push_back(sample_cn(cfg.M, cfg.N(), 1.0, rng));
  }
  SclstmOutput base;
  base.G = ep.G;
  base.h = h0;
  for (std::size_t k = 0; k < cfg.K; ++k) base.H.push_back(cascade(ep.G, h0[k]));
  const double base_loss = loss_mse({base}, {target});
  for (int trial = 0; trial < 100; ++trial) {
    Rng tr(900 + trial);
    ComplexMatrix Gd = ep.G;
    std::vector<ComplexMatrix> hd = h0;
    for (std::size_t n = 0; n < cfg.N(); ++n) {
      const cplx d = tr.cn(1.0) + cplx(2.0, 0.0);
      for (std::size_t m = 0; m < cfg.M; ++m) Gd(m, n) *= d;
      for (std::size_t k = 0; k < cfg.K; ++k) hd[k](n, 0) /= d;
    }
    SclstmOutput amb;
    amb.G = Gd;
    amb.h = hd;
    for (std::size_t k = 0; k < cfg.K; ++k) amb.H.push_back(cascade(Gd, hd[k]));
    worst_loss = std::max(
        worst_loss, std::abs(loss_mse({amb}, {target}) - base_loss) /
                        std::max(1.0, base_loss));
    auto [G_hat, h_hat] = correct_scaling(Gd, hd, ep.G.row(0));
    worst_rec = std::max(worst_rec,
                         (G_hat - ep.G).frobenius_norm() / ep.G.frobenius_norm());
    for (std::size_t k = 0; k < cfg.K; ++k)
      worst_rec = std::max(worst_rec, (h_hat[k] - h0[k]).frobenius_norm() /
                                          h0[k].frobenius_norm());
  }
  ok = worst_loss <= 1e-12 && worst_rec <= 1e-10 && seconds_since(t0) < 10.0;
  report(5, ok, "loss drift " + fmt(worst_loss) + ", recovery error " + fmt(worst_rec) +
                    " over 100 random scalings (" + fmt(seconds_since(t0)) + " s)");
}

// trained models reused by criterion 8
std::map<std::string, TrainedModel> g_models;

TrainedModel train_desk(std::size_t S, double snr_db, std::size_t epochs) {
  SystemConfig cfg = desk_cfg(S, snr_db);
  cfg.seed = 1234;
  Rng root(cfg.seed);
  Rng dtrain = root.split(100);
  Rng dval = root.split(200);
  Rng init = root.split(300);
  const double sigma2 = cfg.noise_variance();
  const Dataset tr = build_dataset(cfg, 2000, sigma2, dtrain);
  const Dataset va = build_dataset(cfg, 200, sigma2, dval);
  TrainHyper hp;
  hp.epochs = epochs;
  hp.batch_size = 128;
  return train(tr, va, cfg.M, cfg.N(), cfg.K, cfg.S, hp, init);
}

double test_nmse_db(const TrainedModel& m, std::size_t S, double snr_db) {
  SystemConfig cfg = desk_cfg(S, snr_db);
  cfg.seed = 777;
  Rng dt(cfg.seed);
  const Dataset te = build_dataset(cfg, 300, cfg.noise_variance(), dt);
  return to_db(dataset_nmse(m.params, m.norm_c, te));
}

void criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t epochs = 120;
  std::vector<double> snrs = {0.0, 10.0, 20.0, 30.0};
  std::map<double, double> nmse_db_at;
  for (double snr : snrs) {
    const TrainedModel m = train_desk(4, snr, epochs);
    g_models["S4_" + std::to_string(static_cast<int>(snr))] = m;
    nmse_db_at[snr] = test_nmse_db(m, 4, snr);
  }
  const TrainedModel m_s2 = train_desk(2, 20.0, epochs);
  const TrainedModel m_s8 = train_desk(8, 20.0, epochs);
  const double db_s2 = test_nmse_db(m_s2, 2, 20.0);
  const double db_s4 = nmse_db_at[20.0];
  const double db_s8 = test_nmse_db(m_s8, 8, 20.0);

  const bool a = nmse_db_at[10.0] < nmse_db_at[0.0] &&
                 nmse_db_at[20.0] < nmse_db_at[10.0] &&
                 nmse_db_at[30.0] < nmse_db_at[20.0];
  const bool b = nmse_db_at[30.0] <= -10.0;
  const bool c = db_s4 <= db_s2 + 0.5 && db_s8 <= db_s4 + 0.5;
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "(a) NMSE dB vs SNR {0,10,20,30} = {" << fmt(nmse_db_at[0.0]) << ", "
    << fmt(nmse_db_at[10.0]) << ", " << fmt(nmse_db_at[20.0]) << ", "
    << fmt(nmse_db_at[30.0]) << "} " << (a ? "ok" : "VIOLATED") << "; (b) 30 dB point "
    << fmt(nmse_db_at[30.0]) << " dB vs -10 dB target " << (b ? "ok" : "VIOLATED")
    << "; (c) S {2,4,8} at 20 dB = {" << fmt(db_s2) << ", " << fmt(db_s4) << ", "
    << fmt(db_s8) << "} " << (c ? "ok" : "VIOLATED") << " (" << fmt(secs) << " s)";
  report(6, a && b && c && secs < 900.0, d.str());
}

void criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> avg;
  for (std::size_t N : {8, 16, 32}) {
    SystemConfig cfg = desk_cfg(4, 10.0);
    set_ris_elements(cfg, N);
    const PilotPlan plan = make_pilot_plan(cfg.K, cfg.N());
    const double sigma2 = cfg.noise_variance();
    double acc = 0.0;
    Rng root(707 + N);
    for (int trial = 0; trial < 500; ++trial) {
      Rng er = root.split(trial);
      const Episode ep = gen_episode(cfg, cfg.S + 1, er);
      Rng nr = er.split(3);
      std::vector<ComplexMatrix> H;
      for (std::size_t k = 0; k < cfg.K; ++k) H.push_back(ep.H[k][0]);
      std::vector<ComplexMatrix> blocks;
      for (std::size_t j = 0; j < cfg.N(); ++j)
        blocks.push_back(synth_uplink_rx(H, plan.patterns[j], plan.X, sigma2, nr));
      acc += nmse(estimate_cascaded_reference(blocks, plan), H);
    }
    avg.push_back(acc / 500.0);
  }
  const bool ok = avg[1] <= avg[0] && avg[2] <= avg[1] && seconds_since(t0) < 300.0;
  report(7, ok, "stage-2 NMSE over N {8,16,32} = {" + fmt(avg[0]) + ", " + fmt(avg[1]) +
                    ", " + fmt(avg[2]) + "} at 10 dB, 500 trials each (" +
                    fmt(seconds_since(t0)) + " s)");
}

void criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  const TrainedModel& model = g_models.at("S4_20");
  SystemConfig cfg = desk_cfg(4, 20.0);
  const std::size_t tau_steps = 16;
  const std::size_t T_C = 2 * tau_steps;
  const double sigma2 = cfg.noise_variance();
  const std::size_t P_L = stage1_slots(cfg.N()) + stage2_reference_slots(cfg.N()) +
                          cfg.S * stage2_step_slots(cfg.N(), cfg.M, cfg.K);
  bool reruns_ok = true, pilots_ok = true;
  std::vector<double> step_nmse(10, 0.0);
  const int trials = 500;
  Rng root(808);
  for (int trial = 0; trial < trials; ++trial) {
    Rng er = root.split(trial);
    const Episode ep = gen_episode(cfg, T_C + cfg.S, er);
    Rng rr = er.split(5);
    const PredictionTrace tr =
        predict_online(model, ep, T_C, tau_steps, sigma2, G1Source::stage1, rr);
    reruns_ok = reruns_ok && tr.stage_reruns.size() == 2 &&
                tr.stage_reruns[1] == tau_steps;
    pilots_ok = pilots_ok && tr.pilots_total == 2 * P_L;
    // first 10 prediction steps of the first block start at index S
    for (std::size_t i = 0; i < 10; ++i) {
      const StepRecord& r = tr.steps.at(cfg.S + i);
      if (!r.predicted) reruns_ok = false;
      step_nmse[i] += r.nmse_H;
    }
  }
  bool monotone = true;
  std::ostringstream seq;
  for (std::size_t i = 0; i < 10; ++i) {
    step_nmse[i] /= trials;
    if (i) {
      monotone = monotone && step_nmse[i] >= step_nmse[i - 1] - 1e-12;
      seq << ", ";
    }
    seq << fmt(step_nmse[i]);
  }
  const bool ok = reruns_ok && pilots_ok && monotone && seconds_since(t0) < 600.0;
  report(8, ok, std::string("reruns ") + (reruns_ok ? "ok" : "VIOLATED") + ", pilots " +
                    (pilots_ok ? "ok" : "VIOLATED") + ", per-step NMSE {" + seq.str() +
                    "} " + (monotone ? "non-decreasing" : "VIOLATED") + " (" +
                    fmt(seconds_since(t0)) + " s)");
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void criterion9() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string cli = RISP_CLI_PATH;
  const fs::path dir = fs::temp_directory_path() / "risp_acceptance9";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [&](const std::string& args) {
    return std::system(("RIS_PREDICT_THREADS=1 " + cli + " " + args +
                        " >/dev/null 2>&1").c_str()) == 0;
  };
  bool ok = true;
  auto twice_same = [&](const std::string& args, const std::string& out) {
    const std::string o1 = (dir / ("a_" + out)).string();
    const std::string o2 = (dir / ("b_" + out)).string();
    if (!run(args + " --out " + o1) || !run(args + " --out " + o2)) return false;
    return slurp(o1) == slurp(o2) && !slurp(o1).empty();
  };
  ok = ok && twice_same("overhead --M 4 --K 4 --S 4 --N 40 --TL 5000", "oh.csv");
  ok = ok && twice_same("eval --preset desk --what stage2 --trials 10 --snrs 0 10 "
                        "--seed 11", "ev.csv");
  ok = ok && twice_same("eval --preset desk --what model --zero-init --trials 5 "
                        "--snrs 10 --seed 3", "evm.csv");
  ok = ok && twice_same("sumrate --preset desk --TL 2000 --TS-list 400 1000 "
                        "--trials 5 --seed 4", "sr.csv");
  // gen: binary episodes byte-identical
  const std::string g1 = (dir / "gen1").string();
  const std::string g2 = (dir / "gen2").string();
  ok = ok && run("gen --preset desk --episodes 2 --seed 3 --out " + g1);
  ok = ok && run("gen --preset desk --episodes 2 --seed 3 --out " + g2);
  ok = ok && slurp(g1 + "/episode_0.bin") == slurp(g2 + "/episode_0.bin");
  ok = ok && slurp(g1 + "/episode_1.bin") == slurp(g2 + "/episode_1.bin");
  // train + predict: checkpoints and traces byte-identical
  const std::string c1 = (dir / "m1.ckpt").string();
  const std::string c2 = (dir / "m2.ckpt").string();
  const std::string train_args =
      "train --preset desk --train-samples 16 --val-samples 8 --epochs 3 --batch 8 "
      "--seed 5 --out ";
  ok = ok && run(train_args + c1) && run(train_args + c2);
  ok = ok && slurp(c1) == slurp(c2) && !slurp(c1).empty();
  ok = ok && twice_same("predict --preset desk --checkpoint " + c1 +
                        " --blocks 1 --g1 stage1 --seed 6", "tr.csv");
  fs::remove_all(dir);
  report(9, ok, "all subcommands byte-identical across reruns, single-threaded (" +
                    fmt(seconds_since(t0)) + " s)");
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
