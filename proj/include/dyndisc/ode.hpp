#pragma once

#include <Eigen/Dense>

#include "dyndisc/discrepancy.hpp"
#include "dyndisc/kinetics.hpp"

namespace dyndisc {

/// One functional experiment input: time grid with temperature and CO2
/// partial-pressure curves, plus the initial chemical state.
struct InputProfile {
  Eigen::VectorXd t;  // strictly increasing, seconds
  Eigen::VectorXd T;  // Kelvin
  Eigen::VectorXd p;  // mole fraction of total pressure
  double x0 = 0.0;

  int size() const { return static_cast<int>(t.size()); }
  void validate() const;  // throws std::invalid_argument with a reason
};

struct SolverConfig {
  double newton_tol = 1e-12;  // absolute residual tolerance
  int max_newton = 50;
  int substeps = 4;  // Crank-Nicolson steps per data interval
};

/// Result of an implicit solve. ok=false carries the index of the data
/// interval where Newton failed; callers treat that as a rejected proposal.
struct SorbentSolution {
  bool ok = false;
  int fail_index = -1;
  Eigen::VectorXd x;  // chemical state at profile nodes
  Eigen::VectorXd w;  // weight gain M nv x / rho
  long clamp_warnings = 0;
};

struct RealitySolution {
  bool ok = false;
  int fail_index = -1;
  Eigen::VectorXd x;   // carbamate state
  Eigen::VectorXd zs;  // zwitterion state
  Eigen::VectorXd w;
};

/// Crank-Nicolson / Newton integration of the single-reaction sorbent model,
/// optionally with the multiplicative discrepancy embedded in the rate.
/// Inputs at substep nodes come from linear interpolation of T and p.
SorbentSolution solve_sorbent(const SorbentParams& params,
                              const DiscrepancyModel* disc,
                              const InputProfile& profile,
                              const PhysicalConstants& consts,
                              const SolverConfig& cfg = {});

/// Same machinery for the coupled two-reaction truth model (2x2 Newton).
/// The weight column uses x only unless include_z_in_weight is set.
RealitySolution solve_reality(const RealityParams& params,
                              const InputProfile& profile,
                              const PhysicalConstants& consts,
                              const SolverConfig& cfg = {},
                              bool include_z_in_weight = false, double z0 = 0.0);

}  // namespace dyndisc
