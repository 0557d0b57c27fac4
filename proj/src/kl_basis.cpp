#include "dyndisc/kl_basis.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "dyndisc/kernel.hpp"

namespace dyndisc {

KLBasis build_kl_basis(int grid_size, int n_basis) {
  if (n_basis < 1) throw std::invalid_argument("build_kl_basis: n_basis must be >= 1");
  if (grid_size < 4 * n_basis)
    throw std::invalid_argument(
        "build_kl_basis: grid_size must be at least 4*n_basis to resolve the "
        "highest retained eigenfunction");

  const int g = grid_size;
  KLBasis basis;
  basis.grid.resize(g);
  for (int i = 0; i < g; ++i) basis.grid[i] = (i + 0.5) / g;

  // Gram matrix with quadrature weight 1/G; symmetric by construction.
  Eigen::MatrixXd gram(g, g);
  for (int i = 0; i < g; ++i) {
    gram(i, i) = k1(basis.grid[i], basis.grid[i]) / g;
    for (int j = 0; j < i; ++j) {
      const double v = k1(basis.grid[i], basis.grid[j]) / g;
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("build_kl_basis: eigendecomposition failed");

  // Eigen returns ascending order; we keep the top n_basis, descending.
  const Eigen::VectorXd& evals = solver.eigenvalues();
  if (evals[g - 1] <= 0.0)
    throw std::runtime_error("build_kl_basis: leading eigenvalue not positive");

  basis.eigenvalues.resize(n_basis);
  basis.phi.resize(g, n_basis);
  const double sqrt_g = std::sqrt(static_cast<double>(g));
  for (int l = 0; l < n_basis; ++l) {
    double lambda = evals[g - 1 - l];
    if (lambda < -1e-10)
      throw std::runtime_error("build_kl_basis: negative eigenvalue in retained spectrum");
    if (lambda < 0.0) lambda = 0.0;
    basis.eigenvalues[l] = lambda;

    Eigen::VectorXd v = solver.eigenvectors().col(g - 1 - l);
    // Sign convention: first nonzero grid value positive.
    for (int i = 0; i < g; ++i) {
      if (std::abs(v[i]) > 1e-12) {
        if (v[i] < 0.0) v = -v;
        break;
      }
    }
    // Unit eigenvector -> unit grid-quadrature norm needs sqrt(G); fold in
    // sqrt(lambda) so phi columns are the eigenvalue-scaled eigenfunctions.
    basis.phi.col(l) = v * (sqrt_g * std::sqrt(lambda));
  }
  return basis;
}

InterpCell locate_cell(const KLBasis& basis, double u) {
  if (u < 0.0 || u > 1.0) throw std::domain_error("eval_basis: u outside [0,1]");
  const int g = basis.grid_size();
  const double h = basis.cell_width();
  int k = static_cast<int>(std::floor((u - basis.grid[0]) / h));
  if (k < 0) k = 0;
  if (k > g - 2) k = g - 2;
  return {k, (u - basis.grid[k]) / h};
}

Eigen::VectorXd eval_basis(const KLBasis& basis, double u) {
  const InterpCell c = locate_cell(basis, u);
  return basis.phi.row(c.k).transpose() * (1.0 - c.w) +
         basis.phi.row(c.k + 1).transpose() * c.w;
}

Eigen::VectorXd eval_basis_deriv(const KLBasis& basis, double u) {
  const InterpCell c = locate_cell(basis, u);
  return (basis.phi.row(c.k + 1) - basis.phi.row(c.k)).transpose() / basis.cell_width();
}

void save_kl_basis(const KLBasis& basis, const std::string& path) {
  nlohmann::json j;
  j["grid_size"] = basis.grid_size();
  j["n_basis"] = basis.n_basis();
  j["eigenvalues"] = std::vector<double>(
      basis.eigenvalues.data(), basis.eigenvalues.data() + basis.eigenvalues.size());
  std::vector<std::vector<double>> phi(basis.grid_size(),
                                       std::vector<double>(basis.n_basis()));
  for (int i = 0; i < basis.grid_size(); ++i)
    for (int l = 0; l < basis.n_basis(); ++l) phi[i][l] = basis.phi(i, l);
  j["phi"] = phi;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_kl_basis: cannot open " + path);
  out << j.dump() << "\n";
}

KLBasis load_kl_basis(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_kl_basis: cannot open " + path);
  nlohmann::json j;
  in >> j;
  const int g = j.at("grid_size").get<int>();
  const int l = j.at("n_basis").get<int>();
  KLBasis basis;
  basis.grid.resize(g);
  for (int i = 0; i < g; ++i) basis.grid[i] = (i + 0.5) / g;
  basis.eigenvalues.resize(l);
  const auto& ev = j.at("eigenvalues");
  for (int i = 0; i < l; ++i) basis.eigenvalues[i] = ev.at(i).get<double>();
  basis.phi.resize(g, l);
  const auto& phi = j.at("phi");
  for (int i = 0; i < g; ++i)
    for (int c = 0; c < l; ++c) basis.phi(i, c) = phi.at(i).at(c).get<double>();
  return basis;
}

}  // namespace dyndisc
