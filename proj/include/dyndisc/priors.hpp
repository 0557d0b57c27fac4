#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include "dyndisc/discrepancy.hpp"
#include "dyndisc/kinetics.hpp"

namespace dyndisc {

struct NormalPrior {
  double mean = 0.0;
  double var = 1.0;
  // Support truncation; log densities are the untruncated normal within
  // support (no renormalization) and -inf outside.
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct UniformPrior {
  double lo = 0.0;
  double hi = 1.0;
};

struct InvGammaPrior {
  double shape = 1.0;
  double scale = 1.0;  // density ~ x^{-shape-1} exp(-scale/x)
};

/// Chemistry-informed priors; all energies in J/mol.
struct PriorSpec {
  NormalPrior dH{-60840.0, 125.0e6};                        // ab initio
  NormalPrior dS{-250.0, 625.0, -std::numeric_limits<double>::infinity(), -200.0};
  NormalPrior nv{1469.0, 86362.0, 1000.0, 2351.0};
  UniformPrior dHk{50000.0, 150000.0};
  UniformPrior gamma{0.0, 5.0};
  InvGammaPrior tau2{0.5, 30.0};
  InvGammaPrior sigma2{1.0, 1e-8};

  static PriorSpec defaults() { return {}; }
  nlohmann::json to_json() const;
  static PriorSpec from_json(const nlohmann::json& j);
};

double normal_logpdf(double x, double mean, double var);
double trunc_normal_logpdf(double x, const NormalPrior& prior);
double uniform_logpdf(double x, const UniformPrior& prior);
double inv_gamma_logpdf(double x, const InvGammaPrior& prior);

/// Median of the (possibly truncated) normal prior, by bisection on the CDF.
double trunc_normal_median(const NormalPrior& prior);
/// Median of the inverse-gamma prior.
double inv_gamma_median(const InvGammaPrior& prior);

double log_prior_theta(const SorbentParams& params, const PriorSpec& prior);
/// beta_{j,l} ~ N(0, tau2_j) per component of the layout.
double log_prior_beta(const Eigen::VectorXd& beta, const DiscrepancyModel& layout,
                      const Eigen::VectorXd& tau2);

/// Full log prior of (theta, beta | tau2) plus the tau2 and sigma2 hyperpriors.
double log_prior(const SorbentParams& params, const DiscrepancyModel& model,
                 double sigma2, const PriorSpec& prior);

/// Prior-median starting point for the sampler.
SorbentParams prior_median_params(const PriorSpec& prior);

}  // namespace dyndisc
