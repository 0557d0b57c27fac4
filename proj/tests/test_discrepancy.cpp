#include <doctest.h>

#include <random>

#include "dyndisc/discrepancy.hpp"

using namespace dyndisc;

namespace {

DiscrepancyModel small_layout() {
  const KLBasis basis = build_kl_basis(128, 6);
  DiscrepancyLayoutConfig cfg;
  cfg.n_main = 6;
  cfg.n_interaction = 6;
  return build_discrepancy_layout(basis, cfg);
}

// Test-local scalar interpolation, independent of eval_basis.
double interp_col(const KLBasis& basis, int col, double u) {
  const int g = basis.grid_size();
  const double h = basis.grid[1] - basis.grid[0];
  int k = static_cast<int>(std::floor((u - basis.grid[0]) / h));
  if (k < 0) k = 0;
  if (k > g - 2) k = g - 2;
  const double w = (u - basis.grid[k]) / h;
  return basis.phi(k, col) * (1.0 - w) + basis.phi(k + 1, col) * w;
}

// Brute-force oracle: loop every component and term, interpolating each
// input column directly.
double oracle_eval(const DiscrepancyModel& m, Disc which,
                   const std::vector<double>& zeta) {
  const auto& specs = which == Disc::Equilibrium ? m.specs_e : m.specs_k;
  const auto& terms = which == Disc::Equilibrium ? m.terms_e : m.terms_k;
  const auto& ranges = which == Disc::Equilibrium ? m.ranges_e : m.ranges_k;
  const auto& offsets = which == Disc::Equilibrium ? m.offsets_e : m.offsets_k;
  double total = 0.0;
  for (size_t j = 0; j < specs.size(); ++j) {
    for (int l = 0; l < specs[j].n_basis; ++l) {
      double prod = m.beta[offsets[j] + l];
      for (size_t a = 0; a < specs[j].input_indices.size(); ++a) {
        const int input = specs[j].input_indices[a];
        double u = (zeta[input] - ranges[input].lo) /
                   (ranges[input].hi - ranges[input].lo);
        u = std::clamp(u, 0.0, 1.0);
        prod *= interp_col(m.basis, terms[j][l][a], u);
      }
      total += prod;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("default layout dimensions and beta bookkeeping") {
  const KLBasis basis = build_kl_basis(512, 25);
  const DiscrepancyModel m = build_discrepancy_layout(basis);
  CHECK(m.specs_e.size() == 3);  // p, T, p*T
  CHECK(m.specs_k.size() == 6);  // x, p, T and three two-way interactions
  CHECK(m.n_beta_e == 75);
  CHECK(m.n_beta_k == 150);
  CHECK(m.beta.size() == 225);
  CHECK(m.tau2.size() == 9);
  CHECK(m.component_name(0) == "E:p");
  CHECK(m.component_name(2) == "E:p*T");
  CHECK(m.component_name(3) == "K:x");
  CHECK(m.component_name(8) == "K:p*T");

  // Interaction terms are ranked by the eigenvalue product: the first is
  // (0,0), and products are non-increasing down the list.
  const auto& pairs = m.terms_e[2];
  CHECK(pairs[0][0] == 0);
  CHECK(pairs[0][1] == 0);
  double prev = basis.eigenvalues[pairs[0][0]] * basis.eigenvalues[pairs[0][1]];
  for (size_t i = 1; i < pairs.size(); ++i) {
    const double w = basis.eigenvalues[pairs[i][0]] * basis.eigenvalues[pairs[i][1]];
    CHECK(w <= prev + 1e-18);
    prev = w;
  }

  DiscrepancyLayoutConfig threeway;
  threeway.include_threeway = true;
  const DiscrepancyModel m3 = build_discrepancy_layout(basis, threeway);
  CHECK(m3.specs_k.size() == 7);
  CHECK(m3.n_beta_k == 175);
}

TEST_CASE("eval_discrepancy: zero beta, single components, linearity") {
  DiscrepancyModel m = small_layout();
  const double zeta_e[2] = {0.3, 345.0};
  const double zeta_k[3] = {0.12, 0.3, 345.0};

  CHECK(eval_discrepancy(m, Disc::Equilibrium, zeta_e) == 0.0);
  CHECK(eval_discrepancy(m, Disc::Kinetic, zeta_k) == 0.0);

  // Single main-effect coefficient reproduces phi_1 at the rescaled input.
  m.beta[m.offsets_e[0]] = 1.0;  // E:p component, first basis function
  const double u = (0.3 - m.ranges_e[0].lo) / (m.ranges_e[0].hi - m.ranges_e[0].lo);
  CHECK(eval_discrepancy(m, Disc::Equilibrium, zeta_e) ==
        doctest::Approx(eval_basis(m.basis, u)[0]).epsilon(1e-14));

  // Linearity in beta.
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd b1(m.n_beta()), b2(m.n_beta());
  for (int i = 0; i < m.n_beta(); ++i) {
    b1[i] = normal(gen);
    b2[i] = normal(gen);
  }
  m.beta = b1;
  const double d1 = eval_discrepancy(m, Disc::Kinetic, zeta_k);
  m.beta = b2;
  const double d2 = eval_discrepancy(m, Disc::Kinetic, zeta_k);
  m.beta = b1 + b2;
  const double d12 = eval_discrepancy(m, Disc::Kinetic, zeta_k);
  CHECK(std::abs(d12 - (d1 + d2)) < 1e-12);
}

TEST_CASE("eval_discrepancy matches the brute-force oracle") {
  DiscrepancyModel m = small_layout();
  std::mt19937_64 gen(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  for (int rep = 0; rep < 20; ++rep) {
    for (int i = 0; i < m.n_beta(); ++i) m.beta[i] = normal(gen);
    const std::vector<double> zeta_k = {0.5 * unif(gen), unif(gen),
                                        310.0 + 70.0 * unif(gen)};
    const std::vector<double> zeta_e = {zeta_k[1], zeta_k[2]};

    const double got_e =
        eval_discrepancy(m, Disc::Equilibrium, std::span(zeta_e.data(), 2));
    const double got_k =
        eval_discrepancy(m, Disc::Kinetic, std::span(zeta_k.data(), 3));
    CHECK(std::abs(got_e - oracle_eval(m, Disc::Equilibrium, zeta_e)) < 1e-10);
    CHECK(std::abs(got_k - oracle_eval(m, Disc::Kinetic, zeta_k)) < 1e-10);
  }
}

TEST_CASE("out-of-range inputs clamp and increment the warning counter") {
  DiscrepancyModel m = small_layout();
  m.beta.setConstant(0.25);
  ClampCounter warn;

  const double hot[2] = {0.3, 395.0};  // above the calibration range
  const double edge[2] = {0.3, 380.0};
  const double d_hot = eval_discrepancy(m, Disc::Equilibrium, hot, &warn);
  CHECK(warn.count == 1);
  const double d_edge = eval_discrepancy(m, Disc::Equilibrium, edge, &warn);
  CHECK(warn.count == 1);  // in-range evaluation adds nothing
  CHECK(d_hot == doctest::Approx(d_edge).epsilon(1e-12));

  const double cold[2] = {-0.1, 300.0};  // both inputs out of range
  eval_discrepancy(m, Disc::Equilibrium, cold, &warn);
  CHECK(warn.count == 3);
}

TEST_CASE("component spec validation") {
  const KLBasis basis = build_kl_basis(128, 6);
  DiscrepancyModel m = build_discrepancy_layout(basis, {6, 6, false, 6});
  m.specs_e.clear();
  m.terms_e.clear();
  m.offsets_e.clear();
  const double zeta[2] = {0.3, 345.0};
  CHECK_THROWS_AS(eval_discrepancy(m, Disc::Equilibrium, zeta),
                  std::invalid_argument);
}
