#include "dyndisc/kinetics.hpp"

#include <cmath>

namespace dyndisc {

Eigen::Matrix<double, 5, 1> SorbentParams::as_vector() const {
  Eigen::Matrix<double, 5, 1> v;
  v << dH, dS, dHk, gamma, nv;
  return v;
}

SorbentParams SorbentParams::from_vector(const Eigen::Matrix<double, 5, 1>& v) {
  return {v[0], v[1], v[2], v[3], v[4]};
}

RealityParams RealityParams::from_vector(const Eigen::Matrix<double, 9, 1>& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
}

Eigen::Matrix<double, 9, 1> RealityParams::as_vector() const {
  Eigen::Matrix<double, 9, 1> v;
  v << dHx, dSx, dHkx, gammax, nv, dHz, dSz, dHkz, gammaz;
  return v;
}

double equilibrium_constant(const SorbentParams& params, double T,
                            const PhysicalConstants& consts) {
  return std::exp(params.dS / consts.R) * std::exp(-params.dH / (consts.R * T)) /
         consts.P;
}

double rate_constant(const SorbentParams& params, double T,
                     const PhysicalConstants& consts) {
  return params.gamma * T * std::exp(-params.dHk / (consts.R * T));
}

double equilibrium_state(const SorbentParams& params, double p, double T,
                         const PhysicalConstants& consts) {
  if (p <= 0.0) return 0.0;
  const double root = std::sqrt(equilibrium_constant(params, T, consts) * p);
  return root / (1.0 + 2.0 * root);
}

double rhs(double x, double T, double p, const SorbentParams& params,
           const DiscrepancyModel* disc, const PhysicalConstants& consts,
           ClampCounter* warn) {
  double k = rate_constant(params, T, consts);
  double kappa = equilibrium_constant(params, T, consts);
  if (disc) {
    const double ze[2] = {p, T};
    const double zk[3] = {x, p, T};
    kappa *= std::exp(eval_discrepancy(*disc, Disc::Equilibrium, ze, warn));
    k *= std::exp(eval_discrepancy(*disc, Disc::Kinetic, zk, warn));
  }
  const double s = 1.0 - 2.0 * x;
  return k * (s * s * p - x * x / kappa);
}

double rhs_dx(double x, double T, double p, const SorbentParams& params,
              const DiscrepancyModel* disc, const PhysicalConstants& consts,
              ClampCounter* warn) {
  double k = rate_constant(params, T, consts);
  double kappa = equilibrium_constant(params, T, consts);
  double ddk_dx = 0.0;
  if (disc) {
    const double ze[2] = {p, T};
    const double zk[3] = {x, p, T};
    kappa *= std::exp(eval_discrepancy(*disc, Disc::Equilibrium, ze, warn));
    k *= std::exp(eval_discrepancy(*disc, Disc::Kinetic, zk, warn));
    ddk_dx = eval_discrepancy_dinput(*disc, Disc::Kinetic, zk, 0, warn);
  }
  const double s = 1.0 - 2.0 * x;
  const double bracket = s * s * p - x * x / kappa;
  return k * (ddk_dx * bracket - 4.0 * s * p - 2.0 * x / kappa);
}

RealityRates reality_rates(double x, double z, double T, double p,
                           const RealityParams& params,
                           const PhysicalConstants& consts) {
  const double R = consts.R;
  // kappa_x as printed (no /P); kappa_z carries the /P normalization.
  const double kap_x = std::exp(params.dSx / R) * std::exp(-params.dHx / (R * T));
  const double kap_z =
      std::exp(params.dSz / R) * std::exp(-params.dHz / (R * T)) / consts.P;
  const double k_x = params.gammax * std::exp(-params.dHkx / (R * T));
  const double k_z = params.gammaz * std::exp(-params.dHkz / (R * T));

  const double s = 1.0 - 2.0 * x - z;
  RealityRates out;
  out.r2 = k_x * (s * z - x * x / kap_x);  // zwitterion -> carbamate
  out.r1 = k_z * (s * p - z / kap_z);      // gas uptake into zwitterion
  out.fx = out.r2;
  out.fz = out.r1 - out.r2;

  const double dr2_dx = k_x * (-2.0 * z - 2.0 * x / kap_x);
  const double dr2_dz = k_x * (s - z);
  const double dr1_dx = k_z * (-2.0 * p);
  const double dr1_dz = k_z * (-p - 1.0 / kap_z);
  out.dfx_dx = dr2_dx;
  out.dfx_dz = dr2_dz;
  out.dfz_dx = dr1_dx - dr2_dx;
  out.dfz_dz = dr1_dz - dr2_dz;
  return out;
}

}  // namespace dyndisc
