#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "risp/analytics.hpp"
#include "risp/channel.hpp"
#include "risp/checkpoint.hpp"
#include "risp/config.hpp"
#include "risp/csv.hpp"
#include "risp/episode_io.hpp"
#include "risp/manifest.hpp"
#include "risp/pilot.hpp"
#include "risp/pipeline.hpp"
#include "risp/train.hpp"

namespace fs = std::filesystem;
using namespace risp;

namespace {

struct ConfigCli {
  std::string preset_name;
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::size_t> M, K, N, S, tau, TS;
  std::optional<double> snr_db;
  std::optional<std::uint64_t> seed;
};

void add_config_opts(CLI::App* cmd, ConfigCli& c) {
  cmd->add_option("--preset", c.preset_name, "named preset: table3, table3-desk, desk");
  cmd->add_option("--config", c.config_file, "JSON config file");
  cmd->add_option("--set", c.sets, "key=value overrides")->take_all();
  cmd->add_option("--M", c.M, "BS antennas");
  cmd->add_option("--K", c.K, "users");
  cmd->add_option("--N", c.N, "RIS elements (grid auto-factorized)");
  cmd->add_option("--S", c.S, "window length");
  cmd->add_option("--tau", c.tau, "T_L / T_S ratio");
  cmd->add_option("--TS", c.TS, "slots per step");
  cmd->add_option("--snr", c.snr_db, "SNR in dB");
  cmd->add_option("--seed", c.seed, "RNG seed");
}

SystemConfig resolve_config(const ConfigCli& c) {
  SystemConfig cfg = c.preset_name.empty() ? preset("table3") : preset(c.preset_name);
  if (!c.config_file.empty()) {
    std::ifstream is(c.config_file);
    if (!is) throw InvalidInputError("cannot open config file " + c.config_file);
    nlohmann::json j;
    is >> j;
    cfg = j.get<SystemConfig>();
  }
  if (c.M) {
    cfg.M = *c.M;
    cfg.Mx = *c.M;
    cfg.My = 1;
  }
  if (c.K) cfg.K = *c.K;
  if (c.N) set_ris_elements(cfg, *c.N);
  if (c.S) cfg.S = *c.S;
  if (c.tau) cfg.tau = *c.tau;
  if (c.TS) cfg.T_S = *c.TS;
  if (c.snr_db) cfg.snr_db = *c.snr_db;
  if (c.seed) cfg.seed = *c.seed;
  for (const std::string& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidInputError("--set expects key=value");
    nlohmann::json j = cfg;
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    if (!j.contains(key)) throw InvalidInputError("unknown config key: " + key);
    if (j[key].is_number_float())
      j[key] = std::stod(val);
    else
      j[key] = static_cast<std::uint64_t>(std::stoull(val));
    cfg = j.get<SystemConfig>();
    if (key == "Nx" || key == "Ny") cfg.validate();
  }
  cfg.validate();
  return cfg;
}

int cmd_gen(const ConfigCli& cc, const std::string& out_dir, std::size_t episodes,
            std::size_t steps) {
  const SystemConfig cfg = resolve_config(cc);
  fs::create_directories(out_dir);
  const std::size_t total = steps ? steps : cfg.S + 1;
  Rng root(cfg.seed);
  for (std::size_t i = 0; i < episodes; ++i) {
    Rng ep_rng = root.split(i);
    const Episode ep = gen_episode(cfg, total, ep_rng);
    save_episode(out_dir + "/episode_" + std::to_string(i) + ".bin", ep);
  }
  nlohmann::json man = make_manifest("gen", cfg, cfg.seed);
  man["episodes"] = episodes;
  man["steps"] = total;
  man["parameters"] = {{"M", cfg.M},     {"K", cfg.K},      {"L", cfg.L_G},
                       {"f_c", cfg.f_c}, {"v", cfg.v_max}};
  write_manifest(out_dir + "/manifest.json", man);
  std::cout << "wrote " << episodes << " episodes to " << out_dir << "\n";
  return 0;
}

int cmd_train(const ConfigCli& cc, std::size_t n_train, std::size_t n_val,
              std::size_t epochs, std::size_t batch, const std::string& out_ckpt,
              const std::string& history_csv, bool genie) {
  const SystemConfig cfg = resolve_config(cc);
  Rng root(cfg.seed);
  Rng dtrain = root.split(100);
  Rng dval = root.split(200);
  Rng init = root.split(300);
  const double sigma2 = cfg.noise_variance();
  const Dataset train_set = build_dataset(cfg, n_train, sigma2, dtrain, genie);
  const Dataset val_set = build_dataset(cfg, n_val, sigma2, dval, genie);
  TrainHyper hp;
  hp.epochs = epochs;
  hp.batch_size = batch;
  const TrainedModel model =
      train(train_set, val_set, cfg.M, cfg.N(), cfg.K, cfg.S, hp, init);
  save_checkpoint(out_ckpt, model);
  if (!history_csv.empty()) {
    CsvWriter csv(history_csv, {"epoch", "train_loss", "val_loss", "lr"});
    for (const EpochStats& e : model.history) {
      csv.row(e.epoch, e.train_loss, e.val_loss, e.lr);
    }
  }
  nlohmann::json man = make_manifest("train", cfg, cfg.seed);
  man["train_samples"] = n_train;
  man["val_samples"] = n_val;
  man["epochs"] = epochs;
  man["batch_size"] = batch;
  man["best_epoch"] = model.best_epoch;
  man["best_val_loss"] = model.best_val;
  man["checkpoint"] = out_ckpt;
  man["checkpoint_hash"] = hash_file(out_ckpt);
  write_manifest(out_ckpt + ".manifest.json", man);
  std::cout << "best val loss " << model.best_val << " at epoch " << model.best_epoch
            << "\n";
  return 0;
}

int cmd_predict(const ConfigCli& cc, const std::string& ckpt, std::size_t blocks,
                const std::string& g1_mode, double g1_nmse,
                const std::string& out_csv) {
  const SystemConfig cfg = resolve_config(cc);
  const TrainedModel model = load_checkpoint(ckpt);
  const std::size_t T_C = blocks * cfg.tau;
  Rng root(cfg.seed);
  Rng ep_rng = root.split(1);
  Rng run_rng = root.split(2);
  const Episode ep = gen_episode(cfg, T_C + cfg.S, ep_rng);
  G1Source src = G1Source::stage1;
  if (g1_mode == "genie")
    src = G1Source::genie;
  else if (g1_mode == "perturbed")
    src = G1Source::perturbed;
  else if (g1_mode != "stage1")
    throw InvalidInputError("--g1 must be genie|stage1|perturbed");
  const PredictionTrace tr = predict_online(model, ep, T_C, cfg.tau,
                                            cfg.noise_variance(), src, run_rng,
                                            g1_nmse);
  CsvWriter csv(out_csv, {"t", "block", "predicted", "nmse", "nmse_db",
                          "pilots_cumulative"});
  for (const StepRecord& r : tr.steps) {
    csv.row(r.t, r.block, static_cast<std::size_t>(r.predicted), r.nmse_H,
            to_db(r.nmse_H), r.pilots_cumulative);
  }
  nlohmann::json man = make_manifest("predict", cfg, cfg.seed);
  man["checkpoint"] = ckpt;
  man["checkpoint_hash"] = hash_file(ckpt);
  man["blocks"] = blocks;
  man["g1_source"] = g1_mode;
  man["stage_reruns"] = tr.stage_reruns;
  man["pilots_total"] = tr.pilots_total;
  write_manifest(out_csv + ".manifest.json", man);
  return 0;
}

int cmd_eval(const ConfigCli& cc, const std::string& what, const std::string& ckpt,
             bool zero_init, const std::vector<double>& snrs, std::size_t trials,
             const std::string& out_csv) {
  const SystemConfig cfg0 = resolve_config(cc);
  CsvWriter csv(out_csv, {"snr_db", "quantity", "nmse", "nmse_db", "pilot_slots",
                          "trials"});
  const std::vector<double> snr_list = snrs.empty() ? std::vector<double>{cfg0.snr_db}
                                                    : snrs;
  for (double snr : snr_list) {
    SystemConfig cfg = cfg0;
    cfg.snr_db = snr;
    const double sigma2 = cfg.noise_variance();
    Rng root(cfg.seed);
    if (what == "model") {
      TrainedModel model;
      if (zero_init) {
        model.params.resize(cfg.M, cfg.N(), cfg.K, cfg.S);
        model.norm_c = 1.0;
      } else {
        if (ckpt.empty()) throw InvalidInputError("eval model needs --checkpoint");
        model = load_checkpoint(ckpt);
      }
      Rng drng = root.split(400);
      const Dataset ds = build_dataset(cfg, trials, sigma2, drng);
      const double v = dataset_nmse(model.params, model.norm_c, ds);
      csv.row(snr, "model_H", v, to_db(v),
              pilot_overhead_P_L(cfg.N(), cfg.K, cfg.S, cfg.M), trials);
    } else if (what == "stage2") {
      double acc_ref = 0.0, acc_red = 0.0;
      for (std::size_t i = 0; i < trials; ++i) {
        Rng ep_rng = root.split(i);
        Rng n_rng = ep_rng.split(1u << 20);
        const Episode ep = gen_episode(cfg, cfg.S + 1, ep_rng);
        const WindowEstimate w = estimate_window(ep, 0, 0, cfg.S, sigma2, n_rng);
        std::vector<ComplexMatrix> est, truth;
        for (std::size_t k = 0; k < cfg.K; ++k) {
          for (std::size_t s = 0; s < cfg.S; ++s) {
            est.push_back(w.H_hat[k][s]);
            truth.push_back(ep.H[k][s]);
          }
        }
        acc_red += nmse(est, truth);
        // reference quality via the decomposed G (scale-anchored)
        acc_ref += nmse(w.G_hat, ep.G) < 2.0 ? nmse(w.G_hat, ep.G) : 2.0;
      }
      csv.row(snr, "stage2_H", acc_red / trials, to_db(acc_red / trials),
              pilot_overhead_P_L(cfg.N(), cfg.K, cfg.S, cfg.M), trials);
      csv.row(snr, "stage2_G", acc_ref / trials, to_db(acc_ref / trials),
              pilot_overhead_P_L(cfg.N(), cfg.K, cfg.S, cfg.M), trials);
    } else {
      throw InvalidInputError("eval --what must be model|stage2");
    }
  }
  nlohmann::json man = make_manifest("eval", cfg0, cfg0.seed);
  man["what"] = what;
  man["trials"] = trials;
  man["snrs"] = snr_list;
  if (!ckpt.empty()) {
    man["checkpoint"] = ckpt;
    man["checkpoint_hash"] = hash_file(ckpt);
  }
  write_manifest(out_csv + ".manifest.json", man);
  return 0;
}

int cmd_overhead(const ConfigCli& cc, std::size_t T_L, const std::string& out_csv) {
  SystemConfig cfg = resolve_config(cc);
  const TauBounds tb = feasibility_tau_bounds(cfg);
  // report at the configured tau plus the two threshold taus of interest
  const OverheadReport r = pilot_overhead(cfg, T_L);
  CsvWriter csv(out_csv, {"quantity", "value"});
  csv.row("P_L", r.P_L);
  csv.row("P_a", r.P_a);
  csv.row("lambda_d", r.lambda_d);
  csv.row("tau_prop1_loose", tb.prop1_loose);
  csv.row("tau_prop1_exact", tb.prop1_exact);
  csv.row("tau_prop2", tb.prop2);
  csv.row("P_a_mvu", r.P_a_mvu);
  csv.row("P_a_parafac", r.P_a_parafac);
  csv.row("P_a_twotimescale", r.P_a_twotimescale);
  // intersection ordinate at tau = prop2: lambda_d with T_S = T_L / tau slots
  const double P_L = static_cast<double>(r.P_L);
  const double lam = 1.0 - P_L / static_cast<double>(T_L);
  csv.row("lambda_d_at_TL", lam);
  nlohmann::json man = make_manifest("overhead", cfg, cfg.seed);
  man["T_L"] = T_L;
  write_manifest(out_csv + ".manifest.json", man);
  std::cout << "tau thresholds: " << tb.prop2 << " " << tb.prop1_exact << "\n"
            << "lambda_d: " << lam << "\n";
  return 0;
}

int cmd_sumrate(const ConfigCli& cc, std::size_t T_L,
                const std::vector<std::size_t>& TS_list, std::size_t trials,
                const std::string& out_csv) {
  SystemConfig cfg = resolve_config(cc);
  const double sigma2 = cfg.noise_variance();
  const std::size_t P_L = pilot_overhead_P_L(cfg.N(), cfg.K, cfg.S, cfg.M);
  CsvWriter csv(out_csv, {"T_S", "tau", "P_a", "lambda_d", "feasible", "sum_rate"});
  for (std::size_t TS : TS_list) {
    const double tau = static_cast<double>(T_L) / static_cast<double>(TS);
    const double P_a = static_cast<double>(P_L) / tau;
    const double lam = (static_cast<double>(TS) - P_a) / static_cast<double>(TS);
    if (lam <= 0.0) {
      csv.row(TS, tau, P_a, lam, std::size_t{0}, 0.0);
      continue;
    }
    double acc = 0.0;
    Rng root(cfg.seed);
    for (std::size_t i = 0; i < trials; ++i) {
      Rng r = root.split(i);
      const ComplexMatrix G = gen_bs_ris_channel(cfg, r);
      std::vector<ComplexMatrix> h;
      for (std::size_t k = 0; k < cfg.K; ++k) {
        PathSet ps = gen_ris_ue_paths(cfg, r);
        h.push_back(eval_ris_ue_channel(ps, 0, cfg));
      }
      const std::vector<double> theta = greedy_ris_phases(G, h);
      ComplexMatrix H_eff(cfg.K, cfg.M);
      for (std::size_t k = 0; k < cfg.K; ++k)
        for (std::size_t m = 0; m < cfg.M; ++m) {
          cplx s = 0.0;
          for (std::size_t n = 0; n < cfg.N(); ++n) {
            const cplx ph(std::cos(theta[n]), std::sin(theta[n]));
            s += std::conj(h[k](n, 0)) * ph * std::conj(G(m, n));
          }
          H_eff(k, m) = s;
        }
      const ComplexMatrix W = zf_precoder(H_eff);
      acc += sum_rate(G, h, W, theta, sigma2, lam);
    }
    csv.row(TS, tau, P_a, lam, std::size_t{1}, acc / static_cast<double>(trials));
  }
  nlohmann::json man = make_manifest("sumrate", cfg, cfg.seed);
  man["T_L"] = T_L;
  man["trials"] = trials;
  write_manifest(out_csv + ".manifest.json", man);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS-assisted MU-MISO two-timescale channel estimation and "
               "prediction toolkit"};
  app.require_subcommand(1);

  ConfigCli gen_cc, train_cc, pred_cc, eval_cc, oh_cc, sr_cc;

  auto* gen = app.add_subcommand("gen", "generate channel episodes");
  add_config_opts(gen, gen_cc);
  std::string gen_out = "dataset";
  std::size_t gen_eps = 8, gen_steps = 0;
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--episodes", gen_eps, "episode count");
  gen->add_option("--steps", gen_steps, "steps per episode (default S+1)");

  auto* tr = app.add_subcommand("train", "train the prediction network");
  add_config_opts(tr, train_cc);
  std::size_t tr_train = 2000, tr_val = 200, tr_epochs = 60, tr_batch = 128;
  std::string tr_out = "model.ckpt", tr_hist;
  bool tr_genie = false;
  tr->add_option("--train-samples", tr_train);
  tr->add_option("--val-samples", tr_val);
  tr->add_option("--epochs", tr_epochs);
  tr->add_option("--batch", tr_batch);
  tr->add_option("--out", tr_out, "checkpoint path");
  tr->add_option("--history", tr_hist, "training history CSV");
  tr->add_flag("--genie-inputs", tr_genie, "use true channels as inputs");

  auto* pr = app.add_subcommand("predict", "online continuous prediction");
  add_config_opts(pr, pred_cc);
  std::string pr_ckpt, pr_g1 = "stage1", pr_out = "trace.csv";
  std::size_t pr_blocks = 1;
  double pr_g1_nmse = 0.0;
  pr->add_option("--checkpoint", pr_ckpt)->required();
  pr->add_option("--blocks", pr_blocks, "number of T_L blocks");
  pr->add_option("--g1", pr_g1, "g1 source: genie|stage1|perturbed");
  pr->add_option("--g1-nmse", pr_g1_nmse, "target NMSE for perturbed g1");
  pr->add_option("--out", pr_out, "trace CSV path");

  auto* ev = app.add_subcommand("eval", "NMSE evaluation sweeps");
  add_config_opts(ev, eval_cc);
  std::string ev_what = "model", ev_ckpt, ev_out = "eval.csv";
  bool ev_zero = false;
  std::vector<double> ev_snrs;
  std::size_t ev_trials = 100;
  ev->add_option("--what", ev_what, "model|stage2");
  ev->add_option("--checkpoint", ev_ckpt);
  ev->add_flag("--zero-init", ev_zero, "evaluate an all-zero model");
  ev->add_option("--snrs", ev_snrs, "SNR sweep in dB")->take_all();
  ev->add_option("--trials", ev_trials);
  ev->add_option("--out", ev_out);

  auto* oh = app.add_subcommand("overhead", "pilot overhead analytics");
  add_config_opts(oh, oh_cc);
  std::size_t oh_TL = 5000;
  std::string oh_out = "overhead.csv";
  oh->add_option("--TL", oh_TL, "large block length in slots");
  oh->add_option("--out", oh_out);

  auto* sr = app.add_subcommand("sumrate", "downlink sum-rate sweep vs T_S");
  add_config_opts(sr, sr_cc);
  std::size_t sr_TL = 5000, sr_trials = 50;
  std::vector<std::size_t> sr_TS = {250, 500, 1000, 2500, 5000};
  std::string sr_out = "sumrate.csv";
  sr->add_option("--TL", sr_TL);
  sr->add_option("--TS-list", sr_TS)->take_all();
  sr->add_option("--trials", sr_trials);
  sr->add_option("--out", sr_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors exit 2
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_cc, gen_out, gen_eps, gen_steps);
    if (tr->parsed())
      return cmd_train(train_cc, tr_train, tr_val, tr_epochs, tr_batch, tr_out,
                       tr_hist, tr_genie);
    if (pr->parsed())
      return cmd_predict(pred_cc, pr_ckpt, pr_blocks, pr_g1, pr_g1_nmse, pr_out);
    if (ev->parsed())
      return cmd_eval(eval_cc, ev_what, ev_ckpt, ev_zero, ev_snrs, ev_trials, ev_out);
    if (oh->parsed()) return cmd_overhead(oh_cc, oh_TL, oh_out);
    if (sr->parsed()) return cmd_sumrate(sr_cc, sr_TL, sr_TS, sr_trials, sr_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
