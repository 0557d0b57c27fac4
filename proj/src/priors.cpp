#include "dyndisc/priors.hpp"

#include <cmath>
#include <stdexcept>

#include "dyndisc/stats.hpp"

namespace dyndisc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}  // namespace

double normal_logpdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - d * d / (2.0 * var);
}

double trunc_normal_logpdf(double x, const NormalPrior& prior) {
  if (x < prior.lo || x > prior.hi) return kNegInf;
  return normal_logpdf(x, prior.mean, prior.var);
}

double uniform_logpdf(double x, const UniformPrior& prior) {
  if (x < prior.lo || x > prior.hi) return kNegInf;
  return -std::log(prior.hi - prior.lo);
}

double inv_gamma_logpdf(double x, const InvGammaPrior& prior) {
  if (x <= 0.0) return kNegInf;
  return prior.shape * std::log(prior.scale) - std::lgamma(prior.shape) -
         (prior.shape + 1.0) * std::log(x) - prior.scale / x;
}

double trunc_normal_median(const NormalPrior& prior) {
  const double sd = std::sqrt(prior.var);
  auto cdf = [&](double x) { return standard_normal_cdf((x - prior.mean) / sd); };
  const double mass_lo = std::isinf(prior.lo) ? 0.0 : cdf(prior.lo);
  const double mass_hi = std::isinf(prior.hi) ? 1.0 : cdf(prior.hi);
  const double target = 0.5 * (mass_lo + mass_hi);
  double lo = std::isinf(prior.lo) ? prior.mean - 12.0 * sd : prior.lo;
  double hi = std::isinf(prior.hi) ? prior.mean + 12.0 * sd : prior.hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < target) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double inv_gamma_median(const InvGammaPrior& prior) {
  // CDF(x) = Q(shape, scale/x); bisection on x via the regularized upper
  // incomplete gamma, evaluated with a series/continued-fraction split.
  auto upper_q = [&](double a, double s) {
    if (s <= 0.0) return 1.0;
    if (s < a + 1.0) {
      // lower series
      double term = 1.0 / a, sum = term;
      for (int n = 1; n < 500; ++n) {
        term *= s / (a + n);
        sum += term;
        if (term < sum * 1e-16) break;
      }
      const double lower = sum * std::exp(-s + a * std::log(s) - std::lgamma(a));
      return 1.0 - lower;
    }
    // continued fraction for the upper function
    double b = s + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int n = 1; n < 500; ++n) {
      const double an = -n * (n - a);
      b += 2.0;
      d = an * d + b;
      if (std::abs(d) < 1e-300) d = 1e-300;
      c = b + an / c;
      if (std::abs(c) < 1e-300) c = 1e-300;
      d = 1.0 / d;
      const double delta = d * c;
      h *= delta;
      if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-s + a * std::log(s) - std::lgamma(a));
  };
  double lo = prior.scale * 1e-12, hi = prior.scale * 1e12;
  for (int it = 0; it < 400; ++it) {
    const double mid = std::sqrt(lo * hi);  // log-space bisection
    // P(X <= mid) = upper_q(shape, scale/mid)
    if (upper_q(prior.shape, prior.scale / mid) < 0.5) lo = mid; else hi = mid;
  }
  return std::sqrt(lo * hi);
}

double log_prior_theta(const SorbentParams& params, const PriorSpec& prior) {
  double lp = trunc_normal_logpdf(params.dH, prior.dH);
  lp += trunc_normal_logpdf(params.dS, prior.dS);
  lp += trunc_normal_logpdf(params.nv, prior.nv);
  lp += uniform_logpdf(params.dHk, prior.dHk);
  lp += uniform_logpdf(params.gamma, prior.gamma);
  return lp;
}

double log_prior_beta(const Eigen::VectorXd& beta, const DiscrepancyModel& layout,
                      const Eigen::VectorXd& tau2) {
  if (beta.size() != layout.n_beta() || tau2.size() != layout.n_components())
    throw std::invalid_argument("log_prior_beta: size mismatch with layout");
  double lp = 0.0;
  for (int j = 0; j < layout.n_components(); ++j) {
    const int offset = layout.component_offset(j);
    const int size = layout.component_size(j);
    const double t2 = tau2[j];
    lp += -0.5 * size * (kLog2Pi + std::log(t2)) -
          beta.segment(offset, size).squaredNorm() / (2.0 * t2);
  }
  return lp;
}

double log_prior(const SorbentParams& params, const DiscrepancyModel& model,
                 double sigma2, const PriorSpec& prior) {
  double lp = log_prior_theta(params, prior);
  lp += log_prior_beta(model.beta, model, model.tau2);
  for (int j = 0; j < model.n_components(); ++j)
    lp += inv_gamma_logpdf(model.tau2[j], prior.tau2);
  lp += inv_gamma_logpdf(sigma2, prior.sigma2);
  return lp;
}

SorbentParams prior_median_params(const PriorSpec& prior) {
  SorbentParams p;
  p.dH = trunc_normal_median(prior.dH);
  p.dS = trunc_normal_median(prior.dS);
  p.nv = trunc_normal_median(prior.nv);
  p.dHk = 0.5 * (prior.dHk.lo + prior.dHk.hi);
  p.gamma = 0.5 * (prior.gamma.lo + prior.gamma.hi);
  return p;
}

namespace {
nlohmann::json normal_to_json(const NormalPrior& p) {
  nlohmann::json j{{"mean", p.mean}, {"var", p.var}};
  if (!std::isinf(p.lo)) j["lo"] = p.lo;
  if (!std::isinf(p.hi)) j["hi"] = p.hi;
  return j;
}
NormalPrior normal_from_json(const nlohmann::json& j, NormalPrior base) {
  base.mean = j.value("mean", base.mean);
  base.var = j.value("var", base.var);
  if (j.contains("lo")) base.lo = j["lo"].get<double>();
  if (j.contains("hi")) base.hi = j["hi"].get<double>();
  return base;
}
}  // namespace

nlohmann::json PriorSpec::to_json() const {
  return nlohmann::json{
      {"dH", normal_to_json(dH)},
      {"dS", normal_to_json(dS)},
      {"nv", normal_to_json(nv)},
      {"dHk", {{"lo", dHk.lo}, {"hi", dHk.hi}}},
      {"gamma", {{"lo", gamma.lo}, {"hi", gamma.hi}}},
      {"tau2", {{"shape", tau2.shape}, {"scale", tau2.scale}}},
      {"sigma2", {{"shape", sigma2.shape}, {"scale", sigma2.scale}}}};
}

PriorSpec PriorSpec::from_json(const nlohmann::json& j) {
  PriorSpec p;
  if (j.contains("dH")) p.dH = normal_from_json(j["dH"], p.dH);
  if (j.contains("dS")) p.dS = normal_from_json(j["dS"], p.dS);
  if (j.contains("nv")) p.nv = normal_from_json(j["nv"], p.nv);
  if (j.contains("dHk")) {
    p.dHk.lo = j["dHk"].value("lo", p.dHk.lo);
    p.dHk.hi = j["dHk"].value("hi", p.dHk.hi);
  }
  if (j.contains("gamma")) {
    p.gamma.lo = j["gamma"].value("lo", p.gamma.lo);
    p.gamma.hi = j["gamma"].value("hi", p.gamma.hi);
  }
  if (j.contains("tau2")) {
    p.tau2.shape = j["tau2"].value("shape", p.tau2.shape);
    p.tau2.scale = j["tau2"].value("scale", p.tau2.scale);
  }
  if (j.contains("sigma2")) {
    p.sigma2.shape = j["sigma2"].value("shape", p.sigma2.shape);
    p.sigma2.scale = j["sigma2"].value("scale", p.sigma2.scale);
  }
  return p;
}

}  // namespace dyndisc
