#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "risp/pipeline.hpp"
#include "risp/train.hpp"

using namespace risp;

namespace {

SystemConfig small_cfg() {
  SystemConfig c = preset("desk");
  c.seed = 5;
  return c;
}

double rel_err(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a - b).frobenius_norm() / b.frobenius_norm();
}

TrainedModel random_model(const SystemConfig& cfg, std::uint64_t seed) {
  TrainedModel m;
  Rng rng(seed);
  m.params = init_sclstm(cfg.M, cfg.N(), cfg.K, cfg.S, rng);
  m.norm_c = 1.0;
  return m;
}

}  // namespace

TEST_CASE("correct_scaling recovers an ambiguous decomposition") {
  SystemConfig cfg = small_cfg();
  Rng rng(2);
  const Episode ep = gen_episode(cfg, cfg.S + 1, rng);
  const ComplexMatrix g1 = ep.G.row(0);
  for (int trial = 0; trial < 100; ++trial) {
    Rng tr(1000 + trial);
    ComplexMatrix Gt = ep.G;
    std::vector<ComplexMatrix> ht;
    for (std::size_t k = 0; k < cfg.K; ++k) ht.push_back(ep.h[k][0]);
    for (std::size_t n = 0; n < cfg.N(); ++n) {
      const cplx d = tr.cn(1.0) + cplx(2.0, 0.0);
      for (std::size_t m = 0; m < cfg.M; ++m) Gt(m, n) *= d;
      for (std::size_t k = 0; k < cfg.K; ++k) ht[k](n, 0) /= d;
    }
    auto [G_hat, h_hat] = correct_scaling(Gt, ht, g1);
    CHECK(rel_err(G_hat, ep.G) <= 1e-10);
    for (std::size_t k = 0; k < cfg.K; ++k) CHECK(rel_err(h_hat[k], ep.h[k][0]) <= 1e-10);
    // cascaded invariance
    for (std::size_t k = 0; k < cfg.K; ++k) {
      CHECK((cascade(G_hat, h_hat[k]) - cascade(Gt, ht[k])).frobenius_norm() <= 1e-12 *
            cascade(Gt, ht[k]).frobenius_norm() + 1e-12);
    }
  }
}

TEST_CASE("correct_scaling identity and idempotence") {
  SystemConfig cfg = small_cfg();
  Rng rng(4);
  const Episode ep = gen_episode(cfg, cfg.S + 1, rng);
  std::vector<ComplexMatrix> h = {ep.h[0][0], ep.h[1][0]};
  auto [G1, h1] = correct_scaling(ep.G, h, ep.G.row(0));
  CHECK(rel_err(G1, ep.G) <= 1e-14);
  auto [G2, h2] = correct_scaling(G1, h1, ep.G.row(0));
  CHECK((G2 - G1).frobenius_norm() <= 1e-13 * G1.frobenius_norm());
  for (std::size_t k = 0; k < h1.size(); ++k) {
    CHECK((h2[k] - h1[k]).frobenius_norm() <= 1e-13 * h1[k].frobenius_norm());
  }
}

TEST_CASE("correct_scaling rejects near-zero anchors") {
  SystemConfig cfg = small_cfg();
  Rng rng(6);
  const Episode ep = gen_episode(cfg, cfg.S + 1, rng);
  ComplexMatrix g1 = ep.G.row(0);
  g1(0, 3) = cplx(0.0, 0.0);
  std::vector<ComplexMatrix> h = {ep.h[0][0], ep.h[1][0]};
  try {
    correct_scaling(ep.G, h, g1);
    CHECK(false);
  } catch (const IllConditionedCorrectionError& e) {
    CHECK(e.index() == 3);
  }
}

TEST_CASE("online loop: rerun schedule and pilot accounting") {
  SystemConfig cfg = small_cfg();
  const TrainedModel model = random_model(cfg, 31);
  const std::size_t tau_steps = 12;
  Rng erng(71);
  const Episode ep = gen_episode(cfg, 2 * tau_steps + cfg.S, erng);
  const std::size_t P_L = stage1_slots(cfg.N()) + stage2_reference_slots(cfg.N()) +
                          cfg.S * stage2_step_slots(cfg.N(), cfg.M, cfg.K);

  // one block: stages run exactly once
  Rng r1(7);
  const PredictionTrace t1 =
      predict_online(model, ep, tau_steps, tau_steps, 0.0, G1Source::genie, r1);
  CHECK(t1.stage_reruns.size() == 1);
  CHECK(t1.pilots_total == P_L);

  // two blocks: exactly one re-run at the boundary
  Rng r2(7);
  const PredictionTrace t2 =
      predict_online(model, ep, 2 * tau_steps, tau_steps, 0.0, G1Source::genie, r2);
  CHECK(t2.stage_reruns.size() == 2);
  CHECK(t2.stage_reruns[1] == tau_steps);
  CHECK(t2.pilots_total == 2 * P_L);
  // every step is recorded once
  CHECK(t2.steps.size() == 2 * tau_steps);
  for (std::size_t i = 0; i < t2.steps.size(); ++i) CHECK(t2.steps[i].t == i);
}

TEST_CASE("genie plumbing adds zero error") {
  SystemConfig cfg = small_cfg();
  const TrainedModel model = random_model(cfg, 33);
  const std::size_t tau_steps = cfg.S + 2;
  Rng erng(91);
  const Episode ep = gen_episode(cfg, tau_steps + cfg.S, erng);
  Rng r(5);
  const PredictionTrace tr =
      predict_online(model, ep, tau_steps, tau_steps, 0.0, G1Source::genie, r);
  // the first prediction step must equal a bare model call on the true window
  const std::size_t slice = 2 * cfg.M * cfg.N();
  std::vector<double> input(cfg.K * cfg.S * slice);
  for (std::size_t k = 0; k < cfg.K; ++k)
    for (std::size_t s = 0; s < cfg.S; ++s) {
      const std::vector<double> v = stack_complex(ep.H[k][s]);
      std::copy(v.begin(), v.end(), input.begin() + (k * cfg.S + s) * slice);
    }
  const SclstmOutput out = model_predict(model.params, model.norm_c, input);
  std::vector<ComplexMatrix> truth;
  for (std::size_t k = 0; k < cfg.K; ++k) truth.push_back(ep.H[k][cfg.S]);
  const double bare = nmse(out.H, truth);
  const StepRecord& first_pred = tr.steps[cfg.S];
  CHECK(first_pred.predicted);
  CHECK(std::abs(first_pred.nmse_H - bare) <= 1e-12 * std::max(1.0, bare));
}

TEST_CASE("decision-directed refinement: exact predictor, noiseless") {
  SystemConfig cfg = small_cfg();
  Rng rng(3);
  const Episode ep = gen_episode(cfg, cfg.S + 1, rng);
  std::vector<ComplexMatrix> H;
  for (std::size_t k = 0; k < cfg.K; ++k) H.push_back(ep.H[k][0]);
  const PilotPlan plan = make_pilot_plan(cfg.K, cfg.N());
  const std::size_t T = 2 * cfg.K;
  std::vector<std::vector<std::size_t>> symbols(cfg.K);
  Rng srng(8);
  for (std::size_t k = 0; k < cfg.K; ++k)
    for (std::size_t i = 0; i < cfg.N() * T; ++i)
      symbols[k].push_back(static_cast<std::size_t>(srng.uniform() * 4.0));
  Rng nrng(9);
  const std::vector<ComplexMatrix> blocks =
      synth_data_blocks(H, plan.patterns, symbols, T, 0.0, nrng);
  const RefineResult res =
      decision_directed_refine(H, blocks, plan.patterns, &symbols);
  CHECK(res.reliable);
  CHECK(res.symbol_errors == 0);
  CHECK(res.total_symbols == cfg.K * cfg.N() * T);
  for (std::size_t k = 0; k < cfg.K; ++k) CHECK(rel_err(res.H_refined[k], H[k]) <= 1e-8);
}

TEST_CASE("decision-directed refinement: degenerate predictor flagged") {
  SystemConfig cfg = small_cfg();
  Rng rng(3);
  const Episode ep = gen_episode(cfg, cfg.S + 1, rng);
  std::vector<ComplexMatrix> H, zeros;
  for (std::size_t k = 0; k < cfg.K; ++k) {
    H.push_back(ep.H[k][0]);
    zeros.push_back(ComplexMatrix(cfg.M, cfg.N()));
  }
  const PilotPlan plan = make_pilot_plan(cfg.K, cfg.N());
  const std::size_t T = 2 * cfg.K;
  std::vector<std::vector<std::size_t>> symbols(cfg.K);
  Rng srng(8);
  for (std::size_t k = 0; k < cfg.K; ++k)
    for (std::size_t i = 0; i < cfg.N() * T; ++i)
      symbols[k].push_back(static_cast<std::size_t>(srng.uniform() * 4.0));
  Rng nrng(9);
  const std::vector<ComplexMatrix> blocks =
      synth_data_blocks(H, plan.patterns, symbols, T, 0.0, nrng);
  const RefineResult res =
      decision_directed_refine(zeros, blocks, plan.patterns, &symbols);
  CHECK(!res.reliable);
  CHECK_THROWS_AS(decision_directed_refine(H, {}, plan.patterns, nullptr),
                  InvalidInputError);
}

TEST_CASE("model/config mismatch is rejected") {
  SystemConfig cfg = small_cfg();
  SystemConfig other = cfg;
  set_ris_elements(other, 12);
  const TrainedModel model = random_model(other, 3);
  Rng erng(2);
  const Episode ep = gen_episode(cfg, cfg.tau + cfg.S, erng);
  Rng r(1);
  CHECK_THROWS_AS(
      predict_online(model, ep, cfg.tau, cfg.tau, 0.0, G1Source::genie, r),
      CheckpointError);
}
