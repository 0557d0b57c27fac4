#include "dyndisc/predictive.hpp"

#include <cmath>
#include <stdexcept>

#include "dyndisc/stats.hpp"

namespace dyndisc {

std::vector<int> strided_draw_indices(int n_records, int n_draws) {
  if (n_draws < 1 || n_draws > n_records)
    throw std::invalid_argument("strided_draw_indices: need 1 <= n_draws <= n_records");
  std::vector<int> idx(n_draws);
  if (n_draws == 1) {
    idx[0] = n_records - 1;
    return idx;
  }
  for (int i = 0; i < n_draws; ++i) {
    const double pos = static_cast<double>(i) * (n_records - 1) / (n_draws - 1);
    idx[i] = static_cast<int>(std::llround(pos));
  }
  return idx;
}

std::vector<PredictiveBand> posterior_predictive(
    const Chain& chain, const std::vector<ExperimentSeries>& data,
    const DiscrepancyModel& layout, int n_draws, const PhysicalConstants& consts,
    const SolverConfig& solver, WorkerPool* pool, double level) {
  const int n_records = static_cast<int>(chain.samples.size());
  const int n_series = static_cast<int>(data.size());
  if (n_series == 0) throw std::invalid_argument("posterior_predictive: no profiles");
  const std::vector<int> draw_idx = strided_draw_indices(n_records, n_draws);

  // Solve every (draw, profile) pair; drop draws where any profile fails so
  // band columns stay aligned across profiles.
  struct DrawResult {
    bool ok = true;
    std::vector<Eigen::VectorXd> w;
  };
  std::vector<DrawResult> results(n_draws);

  // Each worker owns a model copy (beta/tau2 are per-draw scratch).
  auto run_draw = [&](int d) {
    DiscrepancyModel model = layout;
    const ChainRecord& rec = chain.samples[draw_idx[d]];
    model.beta = rec.beta;
    model.tau2 = rec.tau2;
    const SorbentParams params = SorbentParams::from_vector(rec.theta);
    DrawResult& out = results[d];
    out.w.resize(n_series);
    for (int s = 0; s < n_series; ++s) {
      const SorbentSolution sol =
          solve_sorbent(params, &model, data[s].profile, consts, solver);
      if (!sol.ok) {
        out.ok = false;
        return;
      }
      out.w[s] = sol.w;
    }
  };
  if (pool)
    pool->parallel_for(n_draws, run_draw);
  else
    for (int d = 0; d < n_draws; ++d) run_draw(d);

  std::vector<int> kept;
  for (int d = 0; d < n_draws; ++d)
    if (results[d].ok) kept.push_back(d);
  if (kept.empty())
    throw std::runtime_error("posterior_predictive: every draw failed to solve");

  const double q_lo = 0.5 * (1.0 - level);
  const double q_hi = 1.0 - q_lo;

  std::vector<PredictiveBand> bands(n_series);
  for (int s = 0; s < n_series; ++s) {
    PredictiveBand& band = bands[s];
    const int n_nodes = data[s].profile.size();
    const int n_kept = static_cast<int>(kept.size());
    band.t = data[s].profile.t;
    band.y_obs = data[s].w_obs;
    band.label = data[s].label;
    band.n_dropped = n_draws - n_kept;
    band.eta_draws.resize(n_nodes, n_kept);
    for (int k = 0; k < n_kept; ++k) band.eta_draws.col(k) = results[kept[k]].w[s];

    band.mean = band.eta_draws.rowwise().mean();
    band.lo.resize(n_nodes);
    band.hi.resize(n_nodes);
    band.eta_lo.resize(n_nodes);
    band.eta_hi.resize(n_nodes);

    Eigen::VectorXd sds(n_kept);
    for (int k = 0; k < n_kept; ++k)
      sds[k] = std::sqrt(chain.samples[draw_idx[kept[k]]].sigma2);

    std::vector<double> row(n_kept);
    for (int i = 0; i < n_nodes; ++i) {
      for (int k = 0; k < n_kept; ++k) row[k] = band.eta_draws(i, k);
      band.eta_lo[i] = percentile(row, q_lo);
      band.eta_hi[i] = percentile(row, q_hi);
      const Eigen::VectorXd means = band.eta_draws.row(i).transpose();
      band.lo[i] = gaussian_mixture_quantile(means, sds, q_lo);
      band.hi[i] = gaussian_mixture_quantile(means, sds, q_hi);
    }
  }
  return bands;
}

}  // namespace dyndisc
