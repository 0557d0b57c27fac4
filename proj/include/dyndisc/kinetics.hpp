#pragma once

#include <Eigen/Dense>

#include "dyndisc/discrepancy.hpp"

namespace dyndisc {

struct PhysicalConstants {
  double R = 8.314;     // J/mol-K
  double M = 0.04401;   // kg/mol, CO2
  double rho = 1000.0;  // kg/m^3, sorbent density
  double P = 1.0;       // total pressure, unit absorbed into gamma
};

/// The five calibrated chemistry parameters, all energies in J/mol.
struct SorbentParams {
  double dH;     // reaction enthalpy, < 0
  double dS;     // reaction entropy, J/mol-K
  double dHk;    // activation energy, > 0
  double gamma;  // kinetic prefactor
  double nv;     // amine site density, mol/m^3

  Eigen::Matrix<double, 5, 1> as_vector() const;
  static SorbentParams from_vector(const Eigen::Matrix<double, 5, 1>& v);
};

/// Truth-model parameters for the two-reaction system, ordered
/// [dH_x, dS_x, dHk_x, gamma_x, n_v, dH_z, dS_z, dHk_z, gamma_z].
struct RealityParams {
  double dHx, dSx, dHkx, gammax;
  double nv;
  double dHz, dSz, dHkz, gammaz;

  static RealityParams from_vector(const Eigen::Matrix<double, 9, 1>& v);
  Eigen::Matrix<double, 9, 1> as_vector() const;
};

/// van 't Hoff equilibrium constant, kappa = exp(dS/R) exp(-dH/RT) / P.
double equilibrium_constant(const SorbentParams& params, double T,
                            const PhysicalConstants& consts);

/// Arrhenius rate constant, k = gamma T exp(-dHk/RT).
double rate_constant(const SorbentParams& params, double T,
                     const PhysicalConstants& consts);

/// Root of (1-2x)^2 p - x^2/kappa in [0, 0.5): sqrt(kp)/(1+2 sqrt(kp)).
double equilibrium_state(const SorbentParams& params, double p, double T,
                         const PhysicalConstants& consts);

/// Sorbent rate with optional multiplicative discrepancy:
/// dx/dt = k exp(dK(x,p,T)) [ (1-2x)^2 p - x^2 / (kappa exp(dE(p,T))) ].
double rhs(double x, double T, double p, const SorbentParams& params,
           const DiscrepancyModel* disc, const PhysicalConstants& consts,
           ClampCounter* warn = nullptr);

/// Analytic d(rhs)/dx, including the x-dependence of dK.
double rhs_dx(double x, double T, double p, const SorbentParams& params,
              const DiscrepancyModel* disc, const PhysicalConstants& consts,
              ClampCounter* warn = nullptr);

/// Two-reaction truth-model rates at one state; s = 1 - 2x - z.
struct RealityRates {
  double fx, fz;                  // dx/dt, dz/dt
  double dfx_dx, dfx_dz;          // Jacobian entries
  double dfz_dx, dfz_dz;
  double r1, r2;                  // reaction rates: gas uptake and conversion
};
RealityRates reality_rates(double x, double z, double T, double p,
                           const RealityParams& params,
                           const PhysicalConstants& consts);

}  // namespace dyndisc
