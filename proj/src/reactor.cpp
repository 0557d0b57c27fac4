#include "dyndisc/reactor.hpp"

#include <cmath>
#include <fstream>

#include "dyndisc/predictive.hpp"
#include "dyndisc/stats.hpp"

namespace dyndisc {

void ReactorConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0))
      throw std::invalid_argument(std::string("ReactorConfig: ") + name +
                                  " must be positive");
  };
  positive(length, "length");
  positive(v_solid, "v_solid");
  positive(v_gas, "v_gas");
  positive(gas_in_flux, "gas_in_flux");
  positive(solid_in_flux, "solid_in_flux");
  positive(solid_in_temp, "solid_in_temp");
  positive(hx_coeff, "hx_coeff");
  positive(hx_coolant_temp, "hx_coolant_temp");
  positive(heat_capacity, "heat_capacity");
  if (gas_in_co2_frac < 0.0 || gas_in_co2_frac > 1.0)
    throw std::invalid_argument("ReactorConfig: gas_in_co2_frac outside [0,1]");
  if (n_cells < 10) throw std::invalid_argument("ReactorConfig: n_cells must be >= 10");
}

nlohmann::json ReactorConfig::to_json() const {
  return nlohmann::json{{"schema_version", 1},
                        {"length", length},
                        {"n_cells", n_cells},
                        {"v_solid", v_solid},
                        {"v_gas", v_gas},
                        {"gas_in_co2_frac", gas_in_co2_frac},
                        {"gas_in_flux", gas_in_flux},
                        {"solid_in_flux", solid_in_flux},
                        {"solid_in_temp", solid_in_temp},
                        {"hx_coeff", hx_coeff},
                        {"hx_coolant_temp", hx_coolant_temp},
                        {"heat_capacity", heat_capacity},
                        {"fixed_point_tol", fixed_point_tol},
                        {"max_fixed_point", max_fixed_point},
                        {"relax_T", relax_T}};
}

ReactorConfig ReactorConfig::from_json(const nlohmann::json& j) {
  ReactorConfig c;
  c.length = j.value("length", c.length);
  c.n_cells = j.value("n_cells", c.n_cells);
  c.v_solid = j.value("v_solid", c.v_solid);
  c.v_gas = j.value("v_gas", c.v_gas);
  c.gas_in_co2_frac = j.value("gas_in_co2_frac", c.gas_in_co2_frac);
  c.gas_in_flux = j.value("gas_in_flux", c.gas_in_flux);
  c.solid_in_flux = j.value("solid_in_flux", c.solid_in_flux);
  c.solid_in_temp = j.value("solid_in_temp", c.solid_in_temp);
  c.hx_coeff = j.value("hx_coeff", c.hx_coeff);
  c.hx_coolant_temp = j.value("hx_coolant_temp", c.hx_coolant_temp);
  c.heat_capacity = j.value("heat_capacity", c.heat_capacity);
  c.fixed_point_tol = j.value("fixed_point_tol", c.fixed_point_tol);
  c.max_fixed_point = j.value("max_fixed_point", c.max_fixed_point);
  c.relax_T = j.value("relax_T", c.relax_T);
  c.validate();
  return c;
}

ReactorConfig ReactorConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ReactorConfig: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

void ReactorConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("ReactorConfig: cannot write " + path);
  out << to_json().dump(2) << "\n";
}

namespace {

constexpr double kXMax = 0.5;

// Kinetics adapters: the bed marcher needs a CN step over a residence-time
// increment, the solid CO2 content per site, and the volumetric heat rate.
struct SorbentKinetics {
  const SorbentParams& params;
  const DiscrepancyModel* disc;
  const PhysicalConstants& consts;
  const SolverConfig& solver;
  ClampCounter* warn;

  static constexpr int n_state = 1;

  double co2_content(const Eigen::Vector2d& s) const { return s[0]; }

  double heat_rate(const Eigen::Vector2d& s, double T, double p) const {
    return -params.dH * rhs(s[0], T, p, params, disc, consts, warn);
  }

  bool cn_step(const Eigen::Vector2d& s0, double Tl, double pl, double Tr, double pr,
               double h, Eigen::Vector2d& out) const {
    const double f0 = rhs(s0[0], Tl, pl, params, disc, consts, warn);
    const double h2 = 0.5 * h;
    auto residual = [&](double y) {
      return y - s0[0] - h2 * (f0 + rhs(y, Tr, pr, params, disc, consts, warn));
    };
    double y = s0[0] + h * f0;
    if (y < 0.0) y = 0.0;
    if (y > kXMax) y = kXMax;
    for (int it = 0; it < solver.max_newton; ++it) {
      const double g = residual(y);
      if (std::abs(g) <= solver.newton_tol) {
        out = Eigen::Vector2d(y, 0.0);
        return true;
      }
      const double dg = 1.0 - h2 * rhs_dx(y, Tr, pr, params, disc, consts, warn);
      double y_next = dg != 0.0 ? y - g / dg : 2.0 * kXMax;
      if (y_next < 0.0 || y_next > kXMax) {
        double lo = 0.0, hi = kXMax;
        double glo = residual(lo), ghi = residual(hi);
        if (std::abs(glo) <= solver.newton_tol) { out = Eigen::Vector2d(lo, 0.0); return true; }
        if (std::abs(ghi) <= solver.newton_tol) { out = Eigen::Vector2d(hi, 0.0); return true; }
        if ((glo > 0.0) == (ghi > 0.0)) return false;
        for (int b = 0; b < 200; ++b) {
          const double mid = 0.5 * (lo + hi);
          const double gm = residual(mid);
          if (std::abs(gm) <= solver.newton_tol) { out = Eigen::Vector2d(mid, 0.0); return true; }
          if ((gm > 0.0) == (ghi > 0.0)) { hi = mid; ghi = gm; } else { lo = mid; glo = gm; }
        }
        return false;
      }
      y = y_next;
    }
    return false;
  }
};

struct RealityKinetics {
  const RealityParams& params;
  const PhysicalConstants& consts;
  const SolverConfig& solver;

  static constexpr int n_state = 2;

  // Both the zwitterion and the carbamate hold one CO2 per site.
  double co2_content(const Eigen::Vector2d& s) const { return s[0] + s[1]; }

  double heat_rate(const Eigen::Vector2d& s, double T, double p) const {
    const RealityRates r = reality_rates(s[0], s[1], T, p, params, consts);
    return -params.dHz * r.r1 - params.dHx * r.r2;
  }

  bool in_bounds(const Eigen::Vector2d& y) const {
    return y[0] >= 0.0 && y[0] <= kXMax && y[1] >= 0.0 &&
           1.0 - 2.0 * y[0] - y[1] >= -1e-12;
  }

  bool cn_step(const Eigen::Vector2d& s0, double Tl, double pl, double Tr, double pr,
               double h, Eigen::Vector2d& out) const {
    const RealityRates r0 = reality_rates(s0[0], s0[1], Tl, pl, params, consts);
    const Eigen::Vector2d f0(r0.fx, r0.fz);
    const double h2 = 0.5 * h;
    Eigen::Vector2d y = s0 + h * f0;
    if (!in_bounds(y)) y = s0;
    for (int it = 0; it < solver.max_newton; ++it) {
      const RealityRates r = reality_rates(y[0], y[1], Tr, pr, params, consts);
      const Eigen::Vector2d g = y - s0 - h2 * (f0 + Eigen::Vector2d(r.fx, r.fz));
      if (g.cwiseAbs().maxCoeff() <= solver.newton_tol) {
        out = y;
        return true;
      }
      Eigen::Matrix2d jac;
      jac << 1.0 - h2 * r.dfx_dx, -h2 * r.dfx_dz,
             -h2 * r.dfz_dx, 1.0 - h2 * r.dfz_dz;
      const Eigen::Vector2d step = jac.partialPivLu().solve(g);
      if (!step.allFinite()) return false;
      Eigen::Vector2d y_next = y - step;
      int halvings = 0;
      while (!in_bounds(y_next) && halvings < 40) {
        y_next = 0.5 * (y + y_next);
        ++halvings;
      }
      if (halvings == 40) return false;
      y = y_next;
    }
    return false;
  }
};

template <typename Kinetics>
ReactorSolution march_bed(const Kinetics& kin, double nv, const ReactorConfig& cfg,
                          const PhysicalConstants& consts) {
  cfg.validate();
  const int n = cfg.n_cells;
  const double h = cfg.length / n;
  const double dzeta = h / cfg.v_solid;  // residence time across one cell
  const double site_flux = nv * cfg.solid_in_flux / consts.rho;  // mol sites/m^2-s

  ReactorSolution sol;
  sol.z.resize(n + 1);
  sol.x.resize(n + 1);
  sol.zs.setZero(n + 1);
  sol.T.resize(n + 1);
  sol.p.resize(n + 1);
  sol.t.resize(n + 1);
  sol.co2_flux.resize(n + 1);

  const double c_in = cfg.gas_in_flux * cfg.gas_in_co2_frac;
  const double inert = cfg.gas_in_flux - c_in;

  Eigen::Vector2d state(0.0, 0.0);
  double c_gas = c_in;
  double T = cfg.solid_in_temp;
  double p = cfg.gas_in_co2_frac;

  sol.z[0] = 0.0;
  sol.x[0] = state[0];
  sol.zs[0] = state[1];
  sol.T[0] = T;
  sol.p[0] = p;
  sol.t[0] = 0.0;
  sol.co2_flux[0] = c_gas;

  // Energy balance over one cell, C v dT/dz = q - hx (T - Tc), integrated
  // exactly for the linear exchange term with the source frozen at its cell
  // average (exponential integrator; stiff-safe for large hx).
  const double lam_h = cfg.hx_coeff * h / (cfg.heat_capacity * cfg.v_solid);
  const double decay = -std::expm1(-lam_h);              // 1 - exp(-lam_h)
  const double source_w = lam_h > 1e-12 ? decay / lam_h : 1.0;
  auto energy_step = [&](double T_l, double q_avg) {
    return T_l + decay * (cfg.hx_coolant_temp - T_l) +
           source_w * q_avg * h / (cfg.heat_capacity * cfg.v_solid);
  };

  for (int i = 0; i < n; ++i) {
    // Per-cell fixed point over the coupled (state, p, T) right values.
    Eigen::Vector2d state_r = state;
    double T_r = T, p_r = p, c_r = c_gas;
    bool cell_ok = false;
    for (int sweep = 0; sweep < cfg.max_fixed_point; ++sweep) {
      Eigen::Vector2d state_new;
      if (!kin.cn_step(state, T, p, T_r, p_r, dzeta, state_new)) break;

      const double c_new =
          c_gas - site_flux * (kin.co2_content(state_new) - kin.co2_content(state));
      double p_new = std::max(c_new, 0.0) / (std::max(c_new, 0.0) + inert);
      if (p_new > 1.0) p_new = 1.0;

      const double q_l = site_flux * kin.heat_rate(state, T, p) / cfg.v_solid;
      const double q_r = site_flux * kin.heat_rate(state_new, T_r, p_r) / cfg.v_solid;
      const double T_solved = energy_step(T, 0.5 * (q_l + q_r));
      const double T_new = T_r + cfg.relax_T * (T_solved - T_r);

      const double delta = std::max({(state_new - state_r).cwiseAbs().maxCoeff(),
                                     std::abs(p_new - p_r), std::abs(T_new - T_r)});
      state_r = state_new;
      p_r = p_new;
      T_r = T_new;
      c_r = c_new;
      if (delta <= cfg.fixed_point_tol) {
        cell_ok = true;
        break;
      }
    }
    // A converged cell that overdraws the gas stream is a resolution
    // failure (the depletion front is sharper than the grid): count it as
    // non-convergence so capture fractions stay physical.
    if (cell_ok && c_r < -1e-9 * std::max(c_in, 1e-300)) cell_ok = false;
    if (!cell_ok) {
      sol.fail_cell = i;
      sol.z.conservativeResize(i + 1);
      sol.x.conservativeResize(i + 1);
      sol.zs.conservativeResize(i + 1);
      sol.T.conservativeResize(i + 1);
      sol.p.conservativeResize(i + 1);
      sol.t.conservativeResize(i + 1);
      sol.co2_flux.conservativeResize(i + 1);
      return sol;
    }
    state = state_r;
    c_gas = c_r;
    T = T_r;
    p = p_r;
    sol.z[i + 1] = h * (i + 1);
    sol.x[i + 1] = state[0];
    sol.zs[i + 1] = state[1];
    sol.T[i + 1] = T;
    sol.p[i + 1] = p;
    sol.t[i + 1] = sol.z[i + 1] / cfg.v_solid;
    sol.co2_flux[i + 1] = c_gas;
  }

  sol.converged = true;
  sol.capture_fraction = c_in > 0.0 ? 1.0 - c_gas / c_in : 0.0;
  return sol;
}

}  // namespace

ReactorSolution simulate_reactor(const SorbentParams& params,
                                 const DiscrepancyModel* disc, const ReactorConfig& cfg,
                                 const PhysicalConstants& consts,
                                 const SolverConfig& solver) {
  ClampCounter warn;
  const SorbentKinetics kin{params, disc, consts, solver, disc ? &warn : nullptr};
  ReactorSolution sol = march_bed(kin, params.nv, cfg, consts);
  sol.clamp_warnings = warn.count;
  return sol;
}

ReactorSolution reality_reactor(const RealityParams& params, const ReactorConfig& cfg,
                                const PhysicalConstants& consts,
                                const SolverConfig& solver) {
  const RealityKinetics kin{params, consts, solver};
  return march_bed(kin, params.nv, cfg, consts);
}

InputProfile to_time_coordinate(const ReactorSolution& sol, const ReactorConfig& cfg) {
  if (!sol.converged)
    throw std::invalid_argument("to_time_coordinate: solution not converged");
  InputProfile prof;
  prof.t = sol.z / cfg.v_solid;
  prof.T = sol.T;
  prof.p = sol.p;
  prof.x0 = sol.x[0];
  return prof;
}

PropagateResult propagate(const Chain& chain, int n_samples, const ReactorConfig& cfg,
                          const PhysicalConstants& consts, const DiscrepancyModel& layout,
                          const SolverConfig& solver, WorkerPool* pool) {
  const int n_records = static_cast<int>(chain.samples.size());
  if (n_samples < 1 || n_samples > n_records)
    throw std::invalid_argument("propagate: need 1 <= n_samples <= chain length");

  PropagateResult result;
  result.n_requested = n_samples;
  result.draw_indices = strided_draw_indices(n_records, n_samples);

  std::vector<ReactorSolution> sols(n_samples);
  auto run_draw = [&](int d) {
    DiscrepancyModel model = layout;
    const ChainRecord& rec = chain.samples[result.draw_indices[d]];
    model.beta = rec.beta;
    model.tau2 = rec.tau2;
    sols[d] = simulate_reactor(SorbentParams::from_vector(rec.theta), &model, cfg,
                               consts, solver);
  };
  if (pool)
    pool->parallel_for(n_samples, run_draw);
  else
    for (int d = 0; d < n_samples; ++d) run_draw(d);

  std::vector<int> kept;
  for (int d = 0; d < n_samples; ++d) {
    if (sols[d].converged) {
      kept.push_back(d);
      result.captures.push_back(sols[d].capture_fraction);
      result.capture_draws.push_back(result.draw_indices[d]);
      result.clamp_warnings.push_back(sols[d].clamp_warnings);
    } else {
      ++result.n_failed;
    }
  }
  if (kept.empty()) throw std::runtime_error("propagate: every draw failed to converge");

  double sum = 0.0;
  for (const double c : result.captures) sum += c;
  result.capture_mean = sum / result.captures.size();
  result.interval_lo = percentile(result.captures, 0.025);
  result.interval_hi = percentile(result.captures, 0.975);
  if (result.captures.size() >= 100)
    result.hpd = hpd_interval(result.captures, 0.95);

  // Pointwise condition bands over the shared z grid.
  const int n_nodes = cfg.n_cells + 1;
  result.z = sols[kept[0]].z;
  result.t = sols[kept[0]].t;
  result.T_lo.resize(n_nodes);
  result.T_med.resize(n_nodes);
  result.T_hi.resize(n_nodes);
  result.p_lo.resize(n_nodes);
  result.p_med.resize(n_nodes);
  result.p_hi.resize(n_nodes);
  std::vector<double> buf(kept.size());
  for (int i = 0; i < n_nodes; ++i) {
    for (size_t k = 0; k < kept.size(); ++k) buf[k] = sols[kept[k]].T[i];
    result.T_lo[i] = percentile(buf, 0.025);
    result.T_med[i] = percentile(buf, 0.5);
    result.T_hi[i] = percentile(buf, 0.975);
    for (size_t k = 0; k < kept.size(); ++k) buf[k] = sols[kept[k]].p[i];
    result.p_lo[i] = percentile(buf, 0.025);
    result.p_med[i] = percentile(buf, 0.5);
    result.p_hi[i] = percentile(buf, 0.975);
  }
  return result;
}

}  // namespace dyndisc
