#include "dyndisc/ode.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dyndisc {

void InputProfile::validate() const {
  const int n = size();
  if (n < 2) throw std::invalid_argument("InputProfile: need at least 2 nodes");
  if (T.size() != n || p.size() != n)
    throw std::invalid_argument("InputProfile: t, T, p lengths differ");
  for (int i = 1; i < n; ++i)
    if (!(t[i] > t[i - 1]))
      throw std::invalid_argument("InputProfile: time grid not strictly increasing");
  for (int i = 0; i < n; ++i) {
    if (!(T[i] > 0.0)) throw std::invalid_argument("InputProfile: T must be positive");
    if (p[i] < 0.0 || p[i] > 1.0)
      throw std::invalid_argument("InputProfile: p outside [0,1]");
  }
  if (x0 < 0.0 || x0 >= 0.5)
    throw std::invalid_argument("InputProfile: x0 outside [0, 0.5)");
}

namespace {

constexpr double kXMax = 0.5;

// Per-substep-node quantities. With a discrepancy model attached, the
// equilibrium correction and the x-independent part of the kinetic
// correction are scalars per node; the x-dependent part reduces to a dot
// product of an effective coefficient vector with the interpolated x-basis
// row, which is what Newton evaluates repeatedly.
struct NodeCache {
  Eigen::VectorXd T, p;
  Eigen::VectorXd kappa, k;        // intrinsic constants at each node
  Eigen::VectorXd delta_e;         // equilibrium discrepancy value
  Eigen::VectorXd const_k;         // x-independent kinetic discrepancy
  Eigen::MatrixXd evec;            // L x n_nodes effective x coefficients
  bool has_disc = false;
  bool has_x_terms = false;
  long clamp_warnings = 0;
};

NodeCache build_node_cache(const SorbentParams& params, const DiscrepancyModel* disc,
                           const InputProfile& profile, const PhysicalConstants& consts,
                           int substeps) {
  const int n_intervals = profile.size() - 1;
  const int n_nodes = n_intervals * substeps + 1;
  NodeCache cache;
  cache.T.resize(n_nodes);
  cache.p.resize(n_nodes);
  cache.kappa.resize(n_nodes);
  cache.k.resize(n_nodes);

  for (int i = 0; i < n_intervals; ++i) {
    for (int s = 0; s < substeps; ++s) {
      const double frac = static_cast<double>(s) / substeps;
      const int j = i * substeps + s;
      cache.T[j] = profile.T[i] + frac * (profile.T[i + 1] - profile.T[i]);
      cache.p[j] = profile.p[i] + frac * (profile.p[i + 1] - profile.p[i]);
    }
  }
  cache.T[n_nodes - 1] = profile.T[n_intervals];
  cache.p[n_nodes - 1] = profile.p[n_intervals];

  for (int j = 0; j < n_nodes; ++j) {
    cache.kappa[j] = equilibrium_constant(params, cache.T[j], consts);
    cache.k[j] = rate_constant(params, cache.T[j], consts);
  }

  if (!disc) return cache;
  cache.has_disc = true;
  const int L = disc->basis.n_basis();
  cache.delta_e.setZero(n_nodes);
  cache.const_k.setZero(n_nodes);
  cache.evec.setZero(L, n_nodes);

  ClampCounter warn;
  Eigen::VectorXd row_p(L), row_T(L);
  for (int j = 0; j < n_nodes; ++j) {
    const double up = rescale_input(cache.p[j], disc->ranges_k[1], &warn);
    const double uT = rescale_input(cache.T[j], disc->ranges_k[2], &warn);
    row_p = eval_basis(disc->basis, up);
    row_T = eval_basis(disc->basis, uT);

    // Equilibrium block over (p, T): fully node-determined.
    double de = 0.0;
    for (size_t c = 0; c < disc->specs_e.size(); ++c) {
      const ComponentSpec& spec = disc->specs_e[c];
      const auto& terms = disc->terms_e[c];
      const int offset = disc->offsets_e[c];
      const int arity = static_cast<int>(spec.input_indices.size());
      for (int l = 0; l < spec.n_basis; ++l) {
        double prod = 1.0;
        for (int a = 0; a < arity; ++a) {
          const Eigen::VectorXd& row = spec.input_indices[a] == 0 ? row_p : row_T;
          prod *= row[terms[l][a]];
        }
        de += disc->beta[offset + l] * prod;
      }
    }
    cache.delta_e[j] = de;

    // Kinetic block over (x, p, T): split x-free terms from x-carrying ones.
    double ck = 0.0;
    for (size_t c = 0; c < disc->specs_k.size(); ++c) {
      const ComponentSpec& spec = disc->specs_k[c];
      const auto& terms = disc->terms_k[c];
      const int offset = disc->offsets_k[c];
      const int arity = static_cast<int>(spec.input_indices.size());
      int x_pos = -1;
      for (int a = 0; a < arity; ++a)
        if (spec.input_indices[a] == 0) x_pos = a;
      for (int l = 0; l < spec.n_basis; ++l) {
        double prod = 1.0;
        for (int a = 0; a < arity; ++a) {
          if (a == x_pos) continue;
          const Eigen::VectorXd& row = spec.input_indices[a] == 1 ? row_p : row_T;
          prod *= row[terms[l][a]];
        }
        if (x_pos < 0)
          ck += disc->beta[offset + l] * prod;
        else
          cache.evec(terms[l][x_pos], j) += disc->beta[offset + l] * prod;
      }
      if (x_pos >= 0) cache.has_x_terms = true;
    }
    cache.const_k[j] = ck;
  }
  cache.clamp_warnings = warn.count;
  return cache;
}

// Evaluator bound to one substep node; blends x-basis rows lazily.
struct NodeRate {
  const NodeCache& cache;
  const DiscrepancyModel* disc;
  int node;
  double inv_x_range = 0.0;
  mutable Eigen::VectorXd phix, dphix;  // scratch

  NodeRate(const NodeCache& c, const DiscrepancyModel* d, int j)
      : cache(c), disc(d), node(j) {
    if (d) {
      inv_x_range = 1.0 / (d->ranges_k[0].hi - d->ranges_k[0].lo);
      phix.resize(d->basis.n_basis());
      dphix.resize(d->basis.n_basis());
    }
  }

  double kappa_eff() const {
    double kap = cache.kappa[node];
    if (cache.has_disc) kap *= std::exp(cache.delta_e[node]);
    return kap;
  }

  void x_basis(double x) const {
    const InputRange& r = disc->ranges_k[0];
    double u = (x - r.lo) * inv_x_range;
    u = u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u);
    const InterpCell c = locate_cell(disc->basis, u);
    phix = disc->basis.phi.row(c.k).transpose() * (1.0 - c.w) +
           disc->basis.phi.row(c.k + 1).transpose() * c.w;
    dphix = (disc->basis.phi.row(c.k + 1) - disc->basis.phi.row(c.k)).transpose() /
            disc->basis.cell_width();
  }

  // rate and its x-derivative in one pass
  void eval(double x, double& f, double& df) const {
    const double p = cache.p[node];
    double k = cache.k[node];
    double kap = cache.kappa[node];
    double ddelta_dx = 0.0;
    if (cache.has_disc) {
      kap *= std::exp(cache.delta_e[node]);
      double dk = cache.const_k[node];
      if (cache.has_x_terms) {
        x_basis(x);
        dk += cache.evec.col(node).dot(phix);
        ddelta_dx = cache.evec.col(node).dot(dphix) * inv_x_range;
      }
      k *= std::exp(dk);
    }
    const double s = 1.0 - 2.0 * x;
    const double bracket = s * s * p - x * x / kap;
    f = k * bracket;
    df = k * (ddelta_dx * bracket - 4.0 * s * p - 2.0 * x / kap);
  }

  double value(double x) const {
    double f, df;
    eval(x, f, df);
    return f;
  }
};

// One Crank-Nicolson step: solve y - x0 - h/2 (f0 + f(y)) = 0 on [0, 0.5].
// Newton with full steps; an iterate leaving the physical range falls back
// to bisection between bracketing endpoints.
bool cn_step(const NodeRate& rate, double x0, double f0, double h,
             const SolverConfig& cfg, double& out) {
  const double h2 = 0.5 * h;
  auto residual = [&](double y) { return y - x0 - h2 * (f0 + rate.value(y)); };

  double y = x0 + h * f0;
  if (y < 0.0) y = 0.0;
  if (y > kXMax) y = kXMax;

  for (int it = 0; it < cfg.max_newton; ++it) {
    double f, df;
    rate.eval(y, f, df);
    const double g = y - x0 - h2 * (f0 + f);
    if (std::abs(g) <= cfg.newton_tol) {
      out = y;
      return true;
    }
    const double dg = 1.0 - h2 * df;
    double y_next = dg != 0.0 ? y - g / dg : 2.0 * kXMax;  // force fallback
    if (y_next < 0.0 || y_next > kXMax) {
      double lo = 0.0, hi = kXMax;
      double glo = residual(lo), ghi = residual(hi);
      if (std::abs(glo) <= cfg.newton_tol) { out = lo; return true; }
      if (std::abs(ghi) <= cfg.newton_tol) { out = hi; return true; }
      if ((glo > 0.0) == (ghi > 0.0)) return false;  // no root in range
      for (int b = 0; b < 200; ++b) {
        const double mid = 0.5 * (lo + hi);
        const double gm = residual(mid);
        if (std::abs(gm) <= cfg.newton_tol) { out = mid; return true; }
        if ((gm > 0.0) == (ghi > 0.0)) { hi = mid; ghi = gm; } else { lo = mid; glo = gm; }
      }
      return false;
    }
    y = y_next;
  }
  return false;
}

}  // namespace

SorbentSolution solve_sorbent(const SorbentParams& params, const DiscrepancyModel* disc,
                              const InputProfile& profile, const PhysicalConstants& consts,
                              const SolverConfig& cfg) {
  profile.validate();
  if (cfg.substeps < 1) throw std::invalid_argument("SolverConfig: substeps must be >= 1");

  const int n = profile.size();
  const NodeCache cache = build_node_cache(params, disc, profile, consts, cfg.substeps);

  SorbentSolution sol;
  sol.clamp_warnings = cache.clamp_warnings;
  sol.x.resize(n);
  sol.w.resize(n);
  sol.x[0] = profile.x0;

  double x = profile.x0;
  for (int i = 0; i < n - 1; ++i) {
    const double dt = (profile.t[i + 1] - profile.t[i]) / cfg.substeps;
    for (int s = 0; s < cfg.substeps; ++s) {
      const int j = i * cfg.substeps + s;
      const NodeRate rate_a(cache, disc, j);
      const NodeRate rate_b(cache, disc, j + 1);
      const double f0 = rate_a.value(x);
      double y;
      if (!cn_step(rate_b, x, f0, dt, cfg, y)) {
        sol.fail_index = i;
        return sol;
      }
      x = y;
    }
    sol.x[i + 1] = x;
  }

  const double scale = consts.M * params.nv / consts.rho;
  sol.w = sol.x * scale;
  sol.ok = true;
  return sol;
}

namespace {

struct RealityStepper {
  const RealityParams& params;
  const PhysicalConstants& consts;

  bool in_bounds(const Eigen::Vector2d& y) const {
    return y[0] >= 0.0 && y[0] <= kXMax && y[1] >= 0.0 &&
           1.0 - 2.0 * y[0] - y[1] >= -1e-12;
  }

  // CN residual for state (x, z) with inputs fixed at the right node.
  bool step(const Eigen::Vector2d& y0, const Eigen::Vector2d& f0, double T, double p,
            double h, const SolverConfig& cfg, Eigen::Vector2d& out) const {
    const double h2 = 0.5 * h;
    Eigen::Vector2d y = y0 + h * f0;
    if (!in_bounds(y)) y = y0;

    for (int it = 0; it < cfg.max_newton; ++it) {
      const RealityRates r = reality_rates(y[0], y[1], T, p, params, consts);
      const Eigen::Vector2d f(r.fx, r.fz);
      const Eigen::Vector2d g = y - y0 - h2 * (f0 + f);
      if (g.cwiseAbs().maxCoeff() <= cfg.newton_tol) {
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

}  // namespace

RealitySolution solve_reality(const RealityParams& params, const InputProfile& profile,
                              const PhysicalConstants& consts, const SolverConfig& cfg,
                              bool include_z_in_weight, double z0) {
  profile.validate();
  if (cfg.substeps < 1) throw std::invalid_argument("SolverConfig: substeps must be >= 1");

  const int n = profile.size();
  RealitySolution sol;
  sol.x.resize(n);
  sol.zs.resize(n);
  sol.x[0] = profile.x0;
  sol.zs[0] = z0;

  const RealityStepper stepper{params, consts};
  Eigen::Vector2d y(profile.x0, z0);
  for (int i = 0; i < n - 1; ++i) {
    const double dt = (profile.t[i + 1] - profile.t[i]) / cfg.substeps;
    for (int s = 0; s < cfg.substeps; ++s) {
      const double frac_a = static_cast<double>(s) / cfg.substeps;
      const double frac_b = static_cast<double>(s + 1) / cfg.substeps;
      const double Ta = profile.T[i] + frac_a * (profile.T[i + 1] - profile.T[i]);
      const double pa = profile.p[i] + frac_a * (profile.p[i + 1] - profile.p[i]);
      const double Tb = profile.T[i] + frac_b * (profile.T[i + 1] - profile.T[i]);
      const double pb = profile.p[i] + frac_b * (profile.p[i + 1] - profile.p[i]);
      const RealityRates ra = reality_rates(y[0], y[1], Ta, pa, params, consts);
      Eigen::Vector2d y_next;
      if (!stepper.step(y, Eigen::Vector2d(ra.fx, ra.fz), Tb, pb, dt, cfg, y_next)) {
        sol.fail_index = i;
        return sol;
      }
      y = y_next;
    }
    sol.x[i + 1] = y[0];
    sol.zs[i + 1] = y[1];
  }

  const double scale = consts.M * params.nv / consts.rho;
  sol.w = include_z_in_weight ? ((sol.x + sol.zs) * scale).eval() : (sol.x * scale).eval();
  sol.ok = true;
  return sol;
}

}  // namespace dyndisc
