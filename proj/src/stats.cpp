#include "dyndisc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dyndisc {

std::pair<double, double> hpd_interval(std::vector<double> samples, double level) {
  const int n = static_cast<int>(samples.size());
  if (n < 100) throw std::invalid_argument("hpd_interval: need at least 100 samples");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("hpd_interval: level must be in (0,1)");
  std::sort(samples.begin(), samples.end());
  const int m = static_cast<int>(std::ceil(level * n));
  int best = 0;
  double best_width = samples[m - 1] - samples[0];
  for (int i = 1; i + m <= n; ++i) {
    const double width = samples[i + m - 1] - samples[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {samples[best], samples[best + m - 1]};
}

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) throw std::invalid_argument("percentile: empty sample");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("percentile: q outside [0,1]");
  std::sort(samples.begin(), samples.end());
  const double pos = q * (samples.size() - 1);
  const int k = static_cast<int>(std::floor(pos));
  if (k + 1 >= static_cast<int>(samples.size())) return samples.back();
  const double w = pos - k;
  return samples[k] * (1.0 - w) + samples[k + 1] * w;
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double gaussian_mixture_quantile(const Eigen::VectorXd& means,
                                 const Eigen::VectorXd& sds, double q) {
  const int n = static_cast<int>(means.size());
  if (n == 0 || sds.size() != n)
    throw std::invalid_argument("gaussian_mixture_quantile: bad component sizes");
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("gaussian_mixture_quantile: q must be in (0,1)");

  auto cdf = [&](double y) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      if (sds[i] > 0.0)
        acc += standard_normal_cdf((y - means[i]) / sds[i]);
      else
        acc += y >= means[i] ? 1.0 : 0.0;
    }
    return acc / n;
  };

  const double pad = 8.0 * (sds.maxCoeff() + 1e-300);
  double lo = means.minCoeff() - pad;
  double hi = means.maxCoeff() + pad;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < q) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace dyndisc
