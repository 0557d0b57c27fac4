#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace dyndisc {

/// Shortest interval containing ceil(level*n) sorted samples (Chen-Shao).
/// Throws std::invalid_argument for fewer than 100 samples or a level
/// outside (0,1).
std::pair<double, double> hpd_interval(std::vector<double> samples, double level);

/// Type-7 empirical quantile of an unsorted sample.
double percentile(std::vector<double> samples, double q);

/// q-quantile of the equal-weight Gaussian mixture sum_i N(mean_i, sd_i^2),
/// solved by bisection on the mixture CDF. Degenerate sd=0 components are
/// treated as point masses.
double gaussian_mixture_quantile(const Eigen::VectorXd& means,
                                 const Eigen::VectorXd& sds, double q);

double standard_normal_cdf(double z);

}  // namespace dyndisc
