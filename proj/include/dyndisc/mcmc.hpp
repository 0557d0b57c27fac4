#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "dyndisc/likelihood.hpp"
#include "dyndisc/priors.hpp"
#include "dyndisc/rng.hpp"

namespace dyndisc {

struct McmcConfig {
  int n_iter = 10000;  // total iterations
  int n_burn = 5000;   // discarded (and adapted) prefix, < n_iter
  int thin = 1;
  std::uint64_t seed = 0;
  double rho_prop = 0.5;  // proposal correlation within the theta pairs

  // Initial random-walk scales; a per-block multiplier is adapted during
  // burn-in toward target_accept and frozen afterwards.
  double scale_dH = 2000.0;
  double scale_dS = 5.0;
  double scale_dHk = 3000.0;
  double scale_gamma = 0.15;
  double scale_nv = 50.0;
  double scale_beta = 0.5;
  bool adapt = true;
  double target_accept = 0.30;

  int abort_window = 1000;       // rolling window for the failure guard
  double abort_fail_frac = 0.5;  // abort when exceeded within the window

  void validate() const;
  nlohmann::json to_json() const;
  static McmcConfig from_json(const nlohmann::json& j);
};

struct ChainRecord {
  Eigen::Matrix<double, 5, 1> theta;  // dH, dS, dHk, gamma, nv
  Eigen::VectorXd beta;
  Eigen::VectorXd tau2;
  double sigma2 = 0.0;
  double log_post = 0.0;
};

struct Chain {
  std::vector<ChainRecord> samples;
  std::vector<std::string> block_names;
  Eigen::VectorXi accepts;
  Eigen::VectorXi proposals;
  long solver_failures = 0;
  std::uint64_t seed = 0;
  McmcConfig config;
  int n_beta = 0;
  int n_components = 0;
};

/// Conjugate full-conditional parameters (unit-testable without sampling).
struct IgParams {
  double shape, scale;
};
IgParams tau2_posterior_params(const Eigen::VectorXd& beta_j, const InvGammaPrior& prior);
IgParams sigma2_posterior_params(double residual_ss, int n, const InvGammaPrior& prior);

double gibbs_update_tau2(const Eigen::VectorXd& beta_j, const InvGammaPrior& prior,
                         Rng& rng);
double gibbs_update_sigma2(double residual_ss, int n, const InvGammaPrior& prior,
                           Rng& rng);

/// One symmetric random-walk Metropolis step over the indexed coordinates of
/// par. step_dirs maps iid normals to the proposal increment (a Cholesky
/// factor times per-coordinate scales); scale multiplies the whole step.
/// Returns the acceptance probability; par/lp are updated on acceptance.
double mh_step(Eigen::VectorXd& par, double& lp,
               const std::vector<int>& idx, const Eigen::MatrixXd& step_dirs,
               double scale,
               const std::function<double(const Eigen::VectorXd&)>& log_target,
               Rng& rng, bool& accepted);

/// Robbins-Monro update of a log proposal multiplier toward target_accept.
void adapt_scale(double& log_scale, double accept_prob, long adapt_count,
                 double target_accept);

class McmcAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metropolis-within-Gibbs sampler: bivariate blocks (dH,dS) and (dHk,gamma)
/// with proposal correlation rho_prop, a scalar nv block, one multivariate
/// block per discrepancy component, then Gibbs sweeps for every tau2_j and
/// sigma2. Deterministic for a given seed, config, and data. Throws McmcAbort
/// when more than abort_fail_frac of any abort_window iterations hit solver
/// failures.
Chain run_mcmc(const std::vector<ExperimentSeries>& data, const PriorSpec& prior,
               const DiscrepancyModel& layout, const McmcConfig& cfg,
               const PhysicalConstants& consts, const SolverConfig& solver = {},
               WorkerPool* pool = nullptr);

void save_chain(const Chain& chain, const std::string& path,
                const nlohmann::json& extra_header = {});
Chain load_chain(const std::string& path, nlohmann::json* header = nullptr);

}  // namespace dyndisc
