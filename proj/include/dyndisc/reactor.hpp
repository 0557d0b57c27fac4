#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dyndisc/mcmc.hpp"

namespace dyndisc {

/// Co-current 1D plug-flow adsorber with a volumetric heat-exchange term;
/// stand-in for the full three-region bubbling-bed process model.
struct ReactorConfig {
  double length = 10.0;        // m
  int n_cells = 96;
  double v_solid = 0.03;       // m/s
  double v_gas = 0.1;          // m/s (reported residence metadata)
  double gas_in_co2_frac = 0.02;
  double gas_in_flux = 0.075;  // total molar flux, mol/m^2-s
  double solid_in_flux = 2.0;  // kg/m^2-s
  double solid_in_temp = 315.0;  // K
  double hx_coeff = 1000.0;    // W/m^3-K
  double hx_coolant_temp = 315.0;  // K
  double heat_capacity = 1.0e6;    // J/m^3-K, effective bed value

  double fixed_point_tol = 1e-8;
  int max_fixed_point = 200;
  double relax_T = 0.5;

  void validate() const;
  nlohmann::json to_json() const;
  static ReactorConfig from_json(const nlohmann::json& j);
  static ReactorConfig load(const std::string& path);
  void save(const std::string& path) const;
};

struct ReactorSolution {
  Eigen::VectorXd z;   // cell-edge grid, n_cells+1 nodes
  Eigen::VectorXd x;   // sorbent loading
  Eigen::VectorXd zs;  // zwitterion state (reality runs only, else zero)
  Eigen::VectorXd T;
  Eigen::VectorXd p;
  Eigen::VectorXd t;          // residence-time coordinate z / v_solid
  Eigen::VectorXd co2_flux;   // gas-side CO2 molar flux at each node
  double capture_fraction = 0.0;
  bool converged = false;
  int fail_cell = -1;
  long clamp_warnings = 0;
};

/// Steady-state march of the calibrated single-reaction kinetics (with the
/// embedded discrepancy when disc is non-null) through the bed.
ReactorSolution simulate_reactor(const SorbentParams& params,
                                 const DiscrepancyModel* disc, const ReactorConfig& cfg,
                                 const PhysicalConstants& consts,
                                 const SolverConfig& solver = {});

/// Same bed driven by the two-reaction truth kinetics.
ReactorSolution reality_reactor(const RealityParams& params, const ReactorConfig& cfg,
                                const PhysicalConstants& consts,
                                const SolverConfig& solver = {});

/// (t, T, p) record of a converged solution for comparison with small-scale
/// inputs; t is the constant-velocity conversion z / v_solid.
InputProfile to_time_coordinate(const ReactorSolution& sol, const ReactorConfig& cfg);

struct PropagateResult {
  std::vector<int> draw_indices;       // strided chain indices, all requested
  std::vector<double> captures;        // converged draws only, draw order
  std::vector<int> capture_draws;      // chain index per capture entry
  std::vector<long> clamp_warnings;    // per converged draw
  int n_requested = 0;
  int n_failed = 0;
  double capture_mean = 0.0;
  double interval_lo = 0.0, interval_hi = 0.0;  // empirical 95% interval
  std::optional<std::pair<double, double>> hpd;  // when >= 100 captures
  // Pointwise condition bands over converged draws.
  Eigen::VectorXd z, t;
  Eigen::VectorXd T_lo, T_med, T_hi;
  Eigen::VectorXd p_lo, p_med, p_hi;
};

/// Forward Monte Carlo of evenly strided posterior draws through the bed.
/// Throws std::runtime_error if every draw fails to converge.
PropagateResult propagate(const Chain& chain, int n_samples, const ReactorConfig& cfg,
                          const PhysicalConstants& consts, const DiscrepancyModel& layout,
                          const SolverConfig& solver = {}, WorkerPool* pool = nullptr);

}  // namespace dyndisc
