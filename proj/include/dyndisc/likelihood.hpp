#pragma once

#include <vector>

#include "dyndisc/data_io.hpp"
#include "dyndisc/discrepancy.hpp"
#include "dyndisc/ode.hpp"
#include "dyndisc/workers.hpp"

namespace dyndisc {

/// Gaussian log likelihood from a residual sum of squares.
double gaussian_loglik(double residual_ss, int n, double sigma2);

/// Residual bookkeeping for one (theta, beta) evaluation over all series.
/// Series solves run in parallel when a pool is supplied; per-series results
/// land in fixed slots and are reduced in series order, so worker count
/// never changes the value.
class LikelihoodEvaluator {
 public:
  LikelihoodEvaluator(const std::vector<ExperimentSeries>& data,
                      PhysicalConstants consts, SolverConfig solver,
                      WorkerPool* pool = nullptr);

  struct Result {
    bool ok = false;
    double ss = 0.0;
    int fail_series = -1;
    long clamp_warnings = 0;
  };

  /// Sum of squared residuals y - eta over every series and node.
  Result residual_ss(const SorbentParams& params, const DiscrepancyModel* disc) const;

  int n_points() const { return n_points_; }
  const std::vector<ExperimentSeries>& data() const { return *data_; }
  const PhysicalConstants& consts() const { return consts_; }
  const SolverConfig& solver() const { return solver_; }

 private:
  const std::vector<ExperimentSeries>* data_;
  PhysicalConstants consts_;
  SolverConfig solver_;
  WorkerPool* pool_;
  int n_points_ = 0;
};

/// One-shot evaluation: -inf when any series solve fails.
double log_likelihood(const std::vector<ExperimentSeries>& data,
                      const SorbentParams& params, const DiscrepancyModel* disc,
                      double sigma2, const PhysicalConstants& consts,
                      const SolverConfig& solver = {}, WorkerPool* pool = nullptr);

}  // namespace dyndisc
