#include <doctest.h>

#include "dyndisc/data_io.hpp"
#include "dyndisc/predictive.hpp"
#include "dyndisc/reactor.hpp"

using namespace dyndisc;

namespace {
const PhysicalConstants kConsts;

struct ChainFixture {
  std::vector<ExperimentSeries> data;
  DiscrepancyModel layout;
  Chain chain;

  explicit ChainFixture(int n_iter = 60, int n_burn = 20) {
    const SorbentParams truth{-70000.0, -220.0, 52000.0, 4.0, 1800.0};
    GenConfig gen;
    gen.p_levels = {0.05, 0.2};
    gen.shape.n_points = 13;
    Rng noise(3);
    for (const InputProfile& prof : gen_profiles(gen)) {
      const SorbentSolution sol = solve_sorbent(truth, nullptr, prof, kConsts, {});
      REQUIRE(sol.ok);
      ExperimentSeries s;
      s.profile = prof;
      s.w_obs = sol.w;
      for (int i = 0; i < s.w_obs.size(); ++i) s.w_obs[i] += 1e-4 * noise.normal();
      data.push_back(std::move(s));
    }
    layout = build_discrepancy_layout(build_kl_basis(128, 6), {6, 6, false, 6});
    McmcConfig cfg;
    cfg.n_iter = n_iter;
    cfg.n_burn = n_burn;
    cfg.seed = 11;
    chain = run_mcmc(data, PriorSpec::defaults(), layout, cfg, kConsts, {});
  }
};
}  // namespace

TEST_CASE("strided draw indices cover the chain without replacement") {
  const std::vector<int> idx = strided_draw_indices(200, 50);
  CHECK(idx.size() == 50);
  CHECK(idx.front() == 0);
  CHECK(idx.back() == 199);
  for (size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] > idx[i - 1]);
  CHECK_THROWS_AS(strided_draw_indices(10, 11), std::invalid_argument);
}

TEST_CASE("posterior_predictive: draw counts and band structure") {
  const ChainFixture fix;
  const std::vector<PredictiveBand> bands =
      posterior_predictive(fix.chain, fix.data, fix.layout, 30, kConsts);
  REQUIRE(bands.size() == fix.data.size());
  for (const PredictiveBand& band : bands) {
    CHECK(band.eta_draws.cols() == 30);  // exactly the requested trajectories
    CHECK(band.eta_draws.rows() == band.t.size());
    CHECK(band.n_dropped == 0);
    for (int i = 0; i < band.t.size(); ++i) {
      CHECK(band.eta_lo[i] <= band.eta_hi[i]);
      CHECK(band.lo[i] <= band.eta_lo[i]);  // noise widens the bands
      CHECK(band.hi[i] >= band.eta_hi[i]);
      CHECK(band.mean[i] ==
            doctest::Approx(band.eta_draws.row(i).mean()).epsilon(1e-12));
    }
  }
}

TEST_CASE("posterior_predictive: single repeated sample gives zero-width eta bands") {
  ChainFixture fix;
  // Collapse the chain onto one record.
  const ChainRecord rec = fix.chain.samples.back();
  for (ChainRecord& r : fix.chain.samples) r = rec;
  const std::vector<PredictiveBand> bands =
      posterior_predictive(fix.chain, fix.data, fix.layout, 10, kConsts);
  for (const PredictiveBand& band : bands) {
    for (int i = 0; i < band.t.size(); ++i) {
      CHECK(band.eta_lo[i] == doctest::Approx(band.mean[i]).epsilon(1e-13));
      CHECK(band.eta_hi[i] == doctest::Approx(band.mean[i]).epsilon(1e-13));
      // Predictive bands still carry the observation noise.
      CHECK(band.hi[i] - band.lo[i] > 3.0 * std::sqrt(rec.sigma2));
    }
  }
}

TEST_CASE("propagate: accounting, determinism, and discrepancy-off consistency") {
  const ChainFixture fix(150, 50);
  ReactorConfig cfg;
  cfg.n_cells = 24;  // keep the test quick
  const PropagateResult result =
      propagate(fix.chain, 40, cfg, kConsts, fix.layout);
  CHECK(result.n_requested == 40);
  CHECK(result.captures.size() + result.n_failed == 40);
  CHECK(result.interval_lo <= result.interval_hi);
  for (const double c : result.captures) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
  CHECK(result.z.size() == cfg.n_cells + 1);
  for (int i = 0; i < result.z.size(); ++i) {
    CHECK(result.T_lo[i] <= result.T_med[i]);
    CHECK(result.T_med[i] <= result.T_hi[i]);
    CHECK(result.p_lo[i] <= result.p_med[i]);
    CHECK(result.p_med[i] <= result.p_hi[i]);
  }

  // Worker fan-out must not change anything.
  WorkerPool pool(3);
  const PropagateResult pooled =
      propagate(fix.chain, 40, cfg, kConsts, fix.layout, {}, &pool);
  REQUIRE(pooled.captures.size() == result.captures.size());
  for (size_t i = 0; i < result.captures.size(); ++i)
    CHECK(pooled.captures[i] == result.captures[i]);

  // Zeroed beta equals parameter-only propagation exactly.
  Chain zeroed = fix.chain;
  for (ChainRecord& r : zeroed.samples) r.beta.setZero();
  const PropagateResult no_disc =
      propagate(zeroed, 10, cfg, kConsts, fix.layout);
  const std::vector<int> idx = strided_draw_indices(
      static_cast<int>(zeroed.samples.size()), 10);
  for (size_t i = 0; i < no_disc.captures.size(); ++i) {
    const ChainRecord& rec = zeroed.samples[no_disc.capture_draws[i]];
    const ReactorSolution direct = simulate_reactor(
        SorbentParams::from_vector(rec.theta), nullptr, cfg, kConsts);
    REQUIRE(direct.converged);
    CHECK(no_disc.captures[i] == direct.capture_fraction);
  }

  // Degenerate chain: zero-spread capture distribution.
  Chain flat = fix.chain;
  const ChainRecord rec = flat.samples.front();
  for (ChainRecord& r : flat.samples) r = rec;
  const PropagateResult degen = propagate(flat, 15, cfg, kConsts, fix.layout);
  CHECK(degen.interval_hi - degen.interval_lo < 1e-15);
}
