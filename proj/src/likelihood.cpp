#include "dyndisc/likelihood.hpp"

#include <cmath>
#include <limits>

namespace dyndisc {

double gaussian_loglik(double residual_ss, int n, double sigma2) {
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  return -0.5 * n * (kLog2Pi + std::log(sigma2)) - residual_ss / (2.0 * sigma2);
}

LikelihoodEvaluator::LikelihoodEvaluator(const std::vector<ExperimentSeries>& data,
                                         PhysicalConstants consts, SolverConfig solver,
                                         WorkerPool* pool)
    : data_(&data), consts_(consts), solver_(solver), pool_(pool) {
  for (const ExperimentSeries& s : data) {
    s.validate();
    n_points_ += s.profile.size();
  }
}

LikelihoodEvaluator::Result LikelihoodEvaluator::residual_ss(
    const SorbentParams& params, const DiscrepancyModel* disc) const {
  const int n_series = static_cast<int>(data_->size());
  std::vector<double> ss(n_series, 0.0);
  std::vector<long> clamps(n_series, 0);
  std::vector<char> ok(n_series, 0);

  auto solve_one = [&](int i) {
    const ExperimentSeries& series = (*data_)[i];
    const SorbentSolution sol =
        solve_sorbent(params, disc, series.profile, consts_, solver_);
    ok[i] = sol.ok ? 1 : 0;
    clamps[i] = sol.clamp_warnings;
    if (sol.ok) ss[i] = (series.w_obs - sol.w).squaredNorm();
  };

  if (pool_)
    pool_->parallel_for(n_series, solve_one);
  else
    for (int i = 0; i < n_series; ++i) solve_one(i);

  Result result;
  for (int i = 0; i < n_series; ++i) {
    result.clamp_warnings += clamps[i];
    if (!ok[i]) {
      result.fail_series = i;
      return result;
    }
    result.ss += ss[i];
  }
  result.ok = true;
  return result;
}

double log_likelihood(const std::vector<ExperimentSeries>& data,
                      const SorbentParams& params, const DiscrepancyModel* disc,
                      double sigma2, const PhysicalConstants& consts,
                      const SolverConfig& solver, WorkerPool* pool) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("log_likelihood: sigma2 must be > 0");
  const LikelihoodEvaluator evaluator(data, consts, solver, pool);
  const auto result = evaluator.residual_ss(params, disc);
  if (!result.ok) return -std::numeric_limits<double>::infinity();
  return gaussian_loglik(result.ss, evaluator.n_points(), sigma2);
}

}  // namespace dyndisc
