#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "dyndisc/data_io.hpp"
#include "dyndisc/mcmc.hpp"
#include "dyndisc/stats.hpp"

using namespace dyndisc;

namespace {

// Kolmogorov-Smirnov p-value against the standard normal (asymptotic).
double ks_pvalue_normal(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const int n = static_cast<int>(sample.size());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cdf = standard_normal_cdf(sample[i]);
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
  }
  const double lambda = d * (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n));
  double p = 0.0;
  for (int k = 1; k <= 100; ++k)
    p += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

struct TinyFixture {
  std::vector<ExperimentSeries> data;
  DiscrepancyModel layout;
  PriorSpec prior;
  PhysicalConstants consts;
  SolverConfig solver;

  TinyFixture() {
    const SorbentParams truth{-70000.0, -220.0, 52000.0, 4.0, 1800.0};
    GenConfig gen;
    gen.p_levels = {0.05, 0.2};
    gen.shape.n_points = 13;
    Rng noise(77);
    for (const InputProfile& prof : gen_profiles(gen)) {
      const SorbentSolution sol = solve_sorbent(truth, nullptr, prof, consts, solver);
      REQUIRE(sol.ok);
      ExperimentSeries s;
      s.profile = prof;
      s.w_obs = sol.w;
      for (int i = 0; i < s.w_obs.size(); ++i) s.w_obs[i] += 1e-4 * noise.normal();
      s.label = "tiny";
      data.push_back(std::move(s));
    }
    layout = build_discrepancy_layout(build_kl_basis(128, 6), {6, 6, false, 6});
  }
};

}  // namespace

TEST_CASE("mh_step: degenerate proposals are always accepted") {
  Eigen::VectorXd par(2);
  par << 1.0, -1.0;
  auto target = [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); };
  double lp = target(par);
  Rng rng(5);
  int accepted_count = 0;
  for (int i = 0; i < 500; ++i) {
    bool accepted = false;
    const double alpha = mh_step(par, lp, {0, 1}, Eigen::MatrixXd::Identity(2, 2),
                                 1e-9, target, rng, accepted);
    CHECK(alpha > 0.999999);
    if (accepted) ++accepted_count;
  }
  CHECK(accepted_count == 500);
}

TEST_CASE("mh_step: proposals outside the support are rejected without mutation") {
  auto target = [](const Eigen::VectorXd& x) {
    if (x[0] < 0.0 || x[0] > 1.0)
      return -std::numeric_limits<double>::infinity();
    return 0.0;
  };
  Eigen::VectorXd par(1);
  par << 0.5;
  double lp = 0.0;
  Rng rng(6);
  int rejected = 0;
  for (int i = 0; i < 2000; ++i) {
    const Eigen::VectorXd before = par;
    bool accepted = false;
    const double alpha = mh_step(par, lp, {0}, Eigen::MatrixXd::Identity(1, 1), 50.0,
                                 target, rng, accepted);
    CHECK(par[0] >= 0.0);
    CHECK(par[0] <= 1.0);
    if (!accepted) {
      ++rejected;
      CHECK(par[0] == before[0]);  // exact preservation on rejection
      CHECK(alpha == 0.0);
      CHECK(lp == 0.0);
    }
  }
  CHECK(rejected > 1800);  // scale 50 on a unit box: nearly everything lands outside
}

TEST_CASE("mh_step recovers a known bivariate Gaussian") {
  // Likelihood stub: N(mu, Sigma) with correlation.
  const Eigen::Vector2d mu(2.0, -1.0);
  Eigen::Matrix2d sigma;
  sigma << 1.0, 0.3, 0.3, 0.25;
  const Eigen::Matrix2d prec = sigma.inverse();
  auto target = [&](const Eigen::VectorXd& x) {
    const Eigen::Vector2d d = x.head(2) - mu;
    return -0.5 * d.dot(prec * d);
  };

  Eigen::VectorXd par(2);
  par << 0.0, 0.0;
  double lp = target(par);
  Rng rng(31415);

  Eigen::MatrixXd dirs(2, 2);
  dirs << 1.0, 0.0, 0.0, 0.5;  // rough marginal scales
  double log_scale = 0.0;

  const int n_iter = 200000, n_burn = 20000;
  std::vector<double> xs, ys;
  xs.reserve(n_iter - n_burn);
  long adapt_count = 0;
  for (int i = 0; i < n_iter; ++i) {
    bool accepted = false;
    const double alpha = mh_step(par, lp, {0, 1}, dirs, std::exp(log_scale), target,
                                 rng, accepted);
    if (i < n_burn)
      adapt_scale(log_scale, alpha, adapt_count++, 0.30);
    else {
      xs.push_back(par[0]);
      ys.push_back(par[1]);
    }
  }

  const int n = static_cast<int>(xs.size());
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  for (int i = 0; i < n; ++i) {
    vx += (xs[i] - mx) * (xs[i] - mx);
    vy += (ys[i] - my) * (ys[i] - my);
    cxy += (xs[i] - mx) * (ys[i] - my);
  }
  vx /= n;
  vy /= n;
  cxy /= n;

  CHECK(std::abs(mx - 2.0) < 0.05 * 2.0);
  CHECK(std::abs(my + 1.0) < 0.05 * 1.0);
  CHECK(std::abs(vx - 1.0) < 0.05);
  CHECK(std::abs(vy - 0.25) < 0.05 * 0.25 + 0.01);
  CHECK(std::abs(cxy - 0.3) < 0.05 * 0.3 + 0.01);

  // Detailed-balance smoke test: thinned standardized marginal passes KS.
  std::vector<double> thinned;
  for (int i = 0; i < n; i += 50) thinned.push_back(xs[i] - 2.0);
  CHECK(ks_pvalue_normal(thinned) > 0.01);
}

TEST_CASE("run_mcmc: bookkeeping, determinism, recomputable log posterior") {
  TinyFixture fix;
  McmcConfig cfg;
  cfg.n_iter = 40;
  cfg.n_burn = 10;
  cfg.seed = 4242;

  const Chain chain =
      run_mcmc(fix.data, fix.prior, fix.layout, cfg, fix.consts, fix.solver);
  CHECK(chain.samples.size() == 30);
  CHECK(chain.block_names.size() == 12);  // 3 theta blocks + 9 beta components
  for (const ChainRecord& rec : chain.samples) {
    CHECK(rec.sigma2 > 0.0);
    CHECK(rec.tau2.minCoeff() > 0.0);
  }

  // Bitwise determinism.
  const Chain again =
      run_mcmc(fix.data, fix.prior, fix.layout, cfg, fix.consts, fix.solver);
  REQUIRE(again.samples.size() == chain.samples.size());
  for (size_t i = 0; i < chain.samples.size(); ++i) {
    CHECK(chain.samples[i].theta == again.samples[i].theta);
    CHECK(chain.samples[i].beta == again.samples[i].beta);
    CHECK(chain.samples[i].sigma2 == again.samples[i].sigma2);
    CHECK(chain.samples[i].log_post == again.samples[i].log_post);
  }

  // Worker count must not change the chain.
  WorkerPool pool(3);
  const Chain pooled =
      run_mcmc(fix.data, fix.prior, fix.layout, cfg, fix.consts, fix.solver, &pool);
  for (size_t i = 0; i < chain.samples.size(); ++i) {
    CHECK(chain.samples[i].theta == pooled.samples[i].theta);
    CHECK(chain.samples[i].beta == pooled.samples[i].beta);
  }

  // Recorded log posterior equals recomputation from the stored state.
  DiscrepancyModel model = fix.layout;
  for (const int i : {0, 7, 29}) {
    const ChainRecord& rec = chain.samples[i];
    model.beta = rec.beta;
    model.tau2 = rec.tau2;
    const SorbentParams params = SorbentParams::from_vector(rec.theta);
    const double ll = log_likelihood(fix.data, params, &model, rec.sigma2, fix.consts,
                                     fix.solver);
    const double lp = ll + log_prior(params, model, rec.sigma2, fix.prior);
    CHECK(rec.log_post == doctest::Approx(lp).epsilon(1e-8));
  }
}

TEST_CASE("run_mcmc: chain save/load round trip") {
  TinyFixture fix;
  McmcConfig cfg;
  cfg.n_iter = 15;
  cfg.n_burn = 5;
  cfg.seed = 9;
  const Chain chain =
      run_mcmc(fix.data, fix.prior, fix.layout, cfg, fix.consts, fix.solver);

  const std::string path =
      (std::filesystem::temp_directory_path() / "chain_roundtrip.ndjson").string();
  save_chain(chain, path, {{"note", "test"}});
  nlohmann::json header;
  const Chain loaded = load_chain(path, &header);
  CHECK(header["note"] == "test");
  CHECK(loaded.samples.size() == chain.samples.size());
  CHECK(loaded.seed == chain.seed);
  for (size_t i = 0; i < chain.samples.size(); ++i) {
    CHECK(loaded.samples[i].theta == chain.samples[i].theta);
    CHECK(loaded.samples[i].beta == chain.samples[i].beta);
    CHECK(loaded.samples[i].tau2 == chain.samples[i].tau2);
    CHECK(loaded.samples[i].sigma2 == chain.samples[i].sigma2);
    CHECK(loaded.samples[i].log_post == chain.samples[i].log_post);
  }
  std::filesystem::remove(path);
}

TEST_CASE("run_mcmc aborts when the solver fails at the start") {
  TinyFixture fix;
  McmcConfig cfg;
  cfg.n_iter = 10;
  cfg.n_burn = 2;
  SolverConfig broken;
  broken.max_newton = 1;
  broken.newton_tol = 0.0;
  CHECK_THROWS_AS(run_mcmc(fix.data, fix.prior, fix.layout, cfg, fix.consts, broken),
                  McmcAbort);
}

TEST_CASE("log_likelihood: zero residuals, sigma scaling, failure contract") {
  TinyFixture fix;
  const SorbentParams truth{-70000.0, -220.0, 52000.0, 4.0, 1800.0};

  // Data generated exactly by the model: residuals vanish.
  std::vector<ExperimentSeries> exact = fix.data;
  for (ExperimentSeries& s : exact) {
    const SorbentSolution sol = solve_sorbent(truth, nullptr, s.profile, fix.consts,
                                              fix.solver);
    s.w_obs = sol.w;
  }
  int n_total = 0;
  for (const auto& s : exact) n_total += s.profile.size();
  const double ll = log_likelihood(exact, truth, nullptr, 1.0, fix.consts, fix.solver);
  CHECK(ll == doctest::Approx(-0.5 * n_total * std::log(2.0 * M_PI)).epsilon(1e-12));

  // Doubling sigma^2 changes the value by -(N/2) log 2 + SS/(4 sigma^2).
  const double sigma2 = 3.7e-8;
  const double l1 = log_likelihood(fix.data, truth, nullptr, sigma2, fix.consts,
                                   fix.solver);
  const double l2 = log_likelihood(fix.data, truth, nullptr, 2.0 * sigma2, fix.consts,
                                   fix.solver);
  LikelihoodEvaluator ev(fix.data, fix.consts, fix.solver);
  const double ss = ev.residual_ss(truth, nullptr).ss;
  CHECK(l2 - l1 ==
        doctest::Approx(-0.5 * n_total * std::log(2.0) + ss / (4.0 * sigma2))
            .epsilon(1e-9));

  // Solver failure maps to -inf.
  SolverConfig broken;
  broken.max_newton = 1;
  broken.newton_tol = 0.0;
  CHECK(log_likelihood(fix.data, truth, nullptr, 1.0, fix.consts, broken) ==
        -std::numeric_limits<double>::infinity());
}
