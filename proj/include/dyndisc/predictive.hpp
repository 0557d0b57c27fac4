#pragma once

#include <vector>

#include "dyndisc/mcmc.hpp"

namespace dyndisc {

/// Pointwise posterior predictive summary for one profile. eta_draws holds
/// one solved trajectory per retained posterior draw (columns). lo/hi are
/// 95% bands of the predictive distribution including observation noise
/// (equal-weight Gaussian mixture over draws); eta_lo/eta_hi are empirical
/// percentile bands of the trajectories alone.
struct PredictiveBand {
  Eigen::VectorXd t;
  Eigen::VectorXd y_obs;
  Eigen::VectorXd mean;
  Eigen::VectorXd lo, hi;
  Eigen::VectorXd eta_lo, eta_hi;
  Eigen::MatrixXd eta_draws;  // n_nodes x n_kept
  int n_dropped = 0;          // draws lost to solver failures
  std::string label;
};

/// Evenly strided drawing of sample indices over [0, n_records).
std::vector<int> strided_draw_indices(int n_records, int n_draws);

std::vector<PredictiveBand> posterior_predictive(
    const Chain& chain, const std::vector<ExperimentSeries>& data,
    const DiscrepancyModel& layout, int n_draws, const PhysicalConstants& consts,
    const SolverConfig& solver = {}, WorkerPool* pool = nullptr, double level = 0.95);

}  // namespace dyndisc
